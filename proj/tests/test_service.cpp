#include <cstdlib>
#include <map>
#include <thread>

#include "doctest.h"
#include "gcs/frame_transport.hpp"
#include "gcs/ppm.hpp"
#include "service_client.hpp"
#include "test_support.hpp"

using namespace gcs;
using namespace std::chrono_literals;
using json = nlohmann::json;
using testing_support::ApiClient;
using testing_support::StreamClient;

namespace {

struct Station {
  explicit Station(double fps = 5.0, const std::filesystem::path* dir = nullptr)
      : service(testing_support::sim_service_config(dir ? *dir : tmp.path(), fps)),
        api(service.http_port()) {}

  json connect() {
    auto r = api.post("/connect");
    REQUIRE(r.status == 200);
    return r.json();
  }

  void stream_on() { REQUIRE(api.post("/command", {{"command", "streamon"}}).status == 200); }

  void wait_for_frame() {
    for (int i = 0; i < 200; ++i) {
      if (!api.get("/state").json()["latest_frame"].is_null()) return;
      std::this_thread::sleep_for(20ms);
    }
    FAIL("no frame arrived");
  }

  TempDir tmp;
  GcsService service;
  ApiClient api;
};

void check_error(const testing_support::Reply& r, int status, const std::string& code) {
  CHECK(r.status == status);
  auto j = json::parse(r.body, nullptr, false);
  REQUIRE(j.is_object());
  CHECK(j["code"] == code);
  CHECK(j["detail"].is_string());
}

}  // namespace

TEST_CASE("connect") {
  Station st;
  auto j = st.connect();
  CHECK(j["sdk_mode"] == true);
  CHECK(j["attempts"] == 1);
  check_error(st.api.post("/connect"), 400, "BadRequest");
  CHECK(st.service.simulator()->state().sdk_mode);
  CHECK(st.api.get("/state").json()["connected"] == true);

  CHECK(st.api.post("/disconnect").status == 200);
  check_error(st.api.post("/disconnect"), 409, "NotConnected");
  CHECK(st.api.post("/connect").status == 200);
}

TEST_CASE("connect without a drone times out after every attempt") {
  TempDir tmp;
  ServiceConfig cfg;
  cfg.http_bind = {"127.0.0.1", 0};
  cfg.data_dir = tmp.path();
  cfg.drone_addr = {"127.0.0.1", testing_support::free_udp_port()};
  cfg.video_addr = {"127.0.0.1", 1};
  cfg.local_bind = {"127.0.0.1", 0};
  cfg.reply_timeout = 50ms;
  cfg.max_retries = 1;
  cfg.connect_attempts = 2;
  GcsService svc(cfg);
  ApiClient api(svc.http_port());
  auto r = api.post("/connect");
  check_error(r, 504, "Timeout");
  CHECK(r.json()["detail"].get<std::string>().find("2 connect attempts") != std::string::npos);
  check_error(api.post("/mission/square", {{"side_cm", 100}}), 409, "NotConnected");
}

TEST_CASE("square mission over HTTP") {
  Station st;
  check_error(st.api.post("/mission/square", {{"side_cm", 100}}), 409, "NotConnected");
  st.connect();
  check_error(st.api.post("/mission/square", {{"side_cm", 5}}), 400, "BadRequest");
  check_error(st.api.post("/mission/square", {{"side", 100}}), 400, "BadRequest");
  const auto initial = st.service.simulator()->state();

  auto r = st.api.post("/mission/square", {{"side_cm", 100}});
  REQUIRE(r.status == 200);
  auto report = r.json();
  CHECK(report["status"] == "completed");
  CHECK(report["frames_captured"] == 4);
  CHECK(report["events"].front()["kind"] == "connect");
  CHECK(report["events"].back()["kind"] == "stop");
  auto list = st.api.get("/snapshots").json();
  REQUIRE(list.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(list[i]["id"] == report["snapshots"][i]);
  CHECK(list[0]["mission"] == "square-100");

  const auto fin = st.service.simulator()->state();
  CHECK(fin.x == initial.x);
  CHECK(fin.y == initial.y);
  CHECK(fin.heading == initial.heading);

  auto state = st.api.get("/state").json();
  CHECK(state["phase"] == "grounded");
  CHECK(state["battery"] == fin.battery);
}

TEST_CASE("mission script endpoint") {
  Station st;
  st.connect();
  auto r = st.api.post("/mission/script", {{"name", "hop"}, {"script", "takeoff\ncapture\nland\n"}});
  REQUIRE(r.status == 200);
  CHECK(r.json()["frames_captured"] == 1);
  check_error(st.api.post("/mission/script", {{"script", "forward 100\n"}}), 400, "BadRequest");
  check_error(st.api.post("/mission/script", {{"script", "jump\n"}}), 400, "BadRequest");
}

TEST_CASE("snapshots") {
  Station st;
  check_error(st.api.post("/snap"), 409, "NoFrameYet");
  st.connect();
  st.stream_on();
  st.wait_for_frame();

  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    auto r = st.api.post("/snap");
    REQUIRE(r.status == 200);
    ids.push_back(r.json()["id"]);
  }
  CHECK(ids[0] != ids[1]);
  auto list = st.api.get("/snapshots").json();
  REQUIRE(list.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(list[i]["id"] == ids[i]);

  auto img = st.api.get("/snapshots/" + ids[0]);
  REQUIRE(img.status == 200);
  auto decoded = decode_ppm(std::span(reinterpret_cast<const std::uint8_t*>(img.body.data()), img.body.size()));
  CHECK(decoded.width() == list[0]["width"]);
  CHECK(st.api.get("/snapshots/" + ids[0] + "/meta").json() == list[0]);

  check_error(st.api.get("/snapshots/snap-999999"), 404, "NotFound");
  check_error(st.api.get("/snapshots/../etc"), 404, "NotFound");
  check_error(st.api.get("/nowhere"), 404, "NotFound");
}

TEST_CASE("process") {
  Station st;
  st.connect();
  st.stream_on();
  st.wait_for_frame();
  const std::string id = st.api.post("/snap").json()["id"];
  const json complement = json::array({{{"op", "complement"}}});

  auto once = st.api.post("/process", {{"snapshot_id", id}, {"pipeline", complement}});
  REQUIRE(once.status == 200);
  const std::string id1 = once.json()["id"];
  CHECK(once.json()["source"] == id);
  auto twice = st.api.post("/process", {{"snapshot_id", id1}, {"pipeline", complement}});
  REQUIRE(twice.status == 200);
  const std::string id2 = twice.json()["id"];
  CHECK(st.api.get("/snapshots/" + id2).body == st.api.get("/snapshots/" + id).body);
  CHECK(twice.json()["lineage"].size() == 2);

  auto bad = st.api.post("/process", {{"snapshot_id", id}, {"pipeline", json::parse(R"([{"op":"edge","operator":"sobel"}])")}});
  check_error(bad, 400, "BadRequest");
  CHECK(bad.json()["step"] == 1);
  auto bad_parse = st.api.post("/process", {{"snapshot_id", id}, {"pipeline", json::parse(R"([{"op":"rgb2gray"},{"op":"blur"}])")}});
  check_error(bad_parse, 400, "BadRequest");
  CHECK(bad_parse.json()["step"] == 2);

  auto hist = st.api.post("/process", {{"snapshot_id", id},
                                       {"pipeline", json::parse(R"([{"op":"rgb2gray"},{"op":"histogram"}])")}});
  REQUIRE(hist.status == 200);
  auto h = hist.json();
  REQUIRE(h["bins"].size() == 256);
  std::uint64_t sum = 0;
  for (const auto& b : h["bins"]) sum += b.get<std::uint64_t>();
  CHECK(sum == h["width"].get<std::uint64_t>() * h["height"].get<std::uint64_t>());
  CHECK(h["output"] == "gray");

  check_error(st.api.post("/process", {{"snapshot_id", "snap-424242"}, {"pipeline", complement}}), 404, "NotFound");
  check_error(st.api.post_raw("/process", "{not json"), 400, "BadRequest");
  check_error(st.api.post("/process", {{"snapshot_id", id}}), 400, "BadRequest");
}

TEST_CASE("direct commands and audit log") {
  Station st;
  check_error(st.api.post("/command", {{"command", "takeoff"}}), 409, "NotConnected");
  st.connect();
  check_error(st.api.post("/command", {{"command", "land"}}), 502, "DroneError");
  check_error(st.api.post("/command", {{"command", "hover"}}), 400, "BadRequest");
  check_error(st.api.post("/command", {{"command", "forward 10"}}), 400, "BadRequest");
  auto up = st.api.post("/command", {{"command", "takeoff"}});
  REQUIRE(up.status == 200);
  CHECK(up.json()["reply"] == "ok");
  auto bat = st.api.post("/command", {{"command", "battery?"}});
  CHECK(bat.json()["value"] == 99);
  auto state = st.api.get("/state").json();
  CHECK(state["phase"] == "flying");
  CHECK(state["altitude"] == 100);

  auto log = st.api.get("/log").json();
  const auto& audit = log["audit"];
  CHECK(audit.size() == 7);  // every POST so far, failed ones included
  CHECK(audit[0]["status"] == 409);
  bool saw_takeoff = false;
  for (const auto& e : log["link"]) saw_takeoff |= e["bytes"] == "takeoff";
  CHECK(saw_takeoff);
}

TEST_CASE("stream: telemetry before streamon, then frames") {
  Station st;
  StreamClient ws(st.service.http_port());
  auto first = ws.read_for(400ms);
  REQUIRE(!first.empty());
  for (const auto& m : first) {
    CHECK(!m.binary);
    CHECK(json::parse(m.data)["type"] == "telemetry");
  }
  st.connect();
  st.stream_on();

  // wait for the first frame, then count for two seconds
  for (;;) {
    auto m = ws.read();
    if (m.binary) break;
  }
  std::uint64_t last_seq = 0;
  int frames = 0;
  json pending;
  for (const auto& m : ws.read_for(2000ms)) {
    if (m.binary) {
      REQUIRE(pending.is_object());
      auto img = decode_frame_payload(std::span(reinterpret_cast<const std::uint8_t*>(m.data.data()) + 4, m.data.size() - 4));
      CHECK(img.width() == pending["width"]);
      ++frames;
      pending = nullptr;
      continue;
    }
    auto j = json::parse(m.data);
    if (j["type"] == "frame") {
      CHECK(j["seq"].get<std::uint64_t>() > last_seq);
      last_seq = j["seq"];
      pending = j;
    }
  }
  CHECK(frames >= 8);
}

TEST_CASE("stream: two clients see identical frames") {
  Station st(10.0);
  StreamClient a(st.service.http_port());
  StreamClient b(st.service.http_port());
  st.connect();
  st.stream_on();
  auto collect = [](StreamClient& c) {
    std::map<std::uint64_t, std::string> by_seq;
    std::uint64_t seq = 0;
    for (const auto& m : c.read_for(1500ms)) {
      if (m.binary) by_seq[seq] = m.data;
      else if (auto j = json::parse(m.data); j["type"] == "frame") seq = j["seq"];
    }
    return by_seq;
  };
  std::map<std::uint64_t, std::string> fa, fb;
  std::thread ta([&] { fa = collect(a); });
  fb = collect(b);
  ta.join();
  int common = 0;
  for (const auto& [seq, bytes] : fa)
    if (auto it = fb.find(seq); it != fb.end()) {
      CHECK(it->second == bytes);
      ++common;
    }
  CHECK(common >= 5);
}

TEST_CASE("restart lists the same snapshots with lineage") {
  TempDir dir;
  json before;
  {
    Station st(5.0, &dir.path());
    st.connect();
    st.stream_on();
    st.wait_for_frame();
    const std::string id = st.api.post("/snap").json()["id"];
    REQUIRE(st.api.post("/process", {{"snapshot_id", id},
                                     {"pipeline", json::parse(R"([{"op":"rgb2gray"},{"op":"histogram"}])")}})
                .status == 200);
    before = st.api.get("/snapshots").json();
  }
  Station again(5.0, &dir.path());
  auto after = again.api.get("/snapshots").json();
  CHECK(after == before);
  REQUIRE(after.size() == 2);
  CHECK(after[1]["lineage"].size() == 2);
  CHECK(after[1]["lineage"][1]["bins"].size() == 256);
}

TEST_CASE("GCS_DATA_DIR overrides the data directory") {
  ServiceConfig cfg;
  cfg.data_dir = "somewhere";
  ::setenv("GCS_DATA_DIR", "/tmp/gcs-elsewhere", 1);
  apply_environment(cfg);
  ::unsetenv("GCS_DATA_DIR");
  CHECK(cfg.data_dir == "/tmp/gcs-elsewhere");
  apply_environment(cfg);
  CHECK(cfg.data_dir == "/tmp/gcs-elsewhere");
}

TEST_CASE("stream: a stalled client does not hold back others") {
  Station st(10.0);
  StreamClient stalled(st.service.http_port());  // never read
  StreamClient live(st.service.http_port());
  st.connect();
  st.stream_on();
  st.wait_for_frame();
  const auto seq0 = st.api.get("/state").json()["latest_frame"]["seq"].get<std::uint64_t>();
  int frames = 0;
  for (const auto& m : live.read_for(2000ms)) frames += m.binary;
  const auto seq1 = st.api.get("/state").json()["latest_frame"]["seq"].get<std::uint64_t>();
  CHECK(frames >= 15);
  CHECK(seq1 - seq0 >= 15);
  CHECK(st.api.get("/state").json()["stream_clients"] == 2);
}
