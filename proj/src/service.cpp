#include "gcs/service.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <future>
#include <iterator>
#include <mutex>
#include <thread>

#include "gcs/ppm.hpp"

namespace gcs {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

std::string_view direction_name(LinkDirection d) {
  switch (d) {
    case LinkDirection::Outbound: return "out";
    case LinkDirection::Inbound: return "in";
    case LinkDirection::Timeout: return "timeout";
    case LinkDirection::Stale: return "stale";
  }
  return "?";
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ApiError(ApiCode::BadRequest, "body must be a JSON object");
  return j;
}

HttpResponse json_response(const json& j, int status = 200) {
  return {status, "application/json", j.dump()};
}

struct Link {
  std::optional<LinkSession> session;
  int attempts = 0;
};

// Owns the link session; every command runs on its one thread in
// submission order.
class CommandExecutor {
 public:
  CommandExecutor() : thread_([this] { loop(); }) {}
  ~CommandExecutor() { stop(); }

  template <class F>
  auto run(F fn) -> std::invoke_result_t<F&, Link&> {
    using R = std::invoke_result_t<F&, Link&>;
    auto task = std::make_shared<std::packaged_task<R()>>(
        [this, fn = std::move(fn)]() mutable { return fn(link_); });
    auto result = task->get_future();
    {
      std::lock_guard lock(mu_);
      if (stopping_) throw ApiError(ApiCode::NotConnected, "service is shutting down");
      queue_.emplace_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return result.get();
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_one();
    thread_.join();
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) break;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
    link_.session.reset();
  }

  Link link_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace

std::string_view to_string(ApiCode code) {
  switch (code) {
    case ApiCode::NotConnected: return "NotConnected";
    case ApiCode::BadRequest: return "BadRequest";
    case ApiCode::NotFound: return "NotFound";
    case ApiCode::DroneError: return "DroneError";
    case ApiCode::Timeout: return "Timeout";
    case ApiCode::NoFrameYet: return "NoFrameYet";
  }
  return "?";
}

int http_status(ApiCode code) {
  switch (code) {
    case ApiCode::NotConnected: return 409;
    case ApiCode::BadRequest: return 400;
    case ApiCode::NotFound: return 404;
    case ApiCode::DroneError: return 502;
    case ApiCode::Timeout: return 504;
    case ApiCode::NoFrameYet: return 409;
  }
  return 500;
}

json ApiError::to_json() const {
  json j{{"code", to_string(code_)}, {"detail", what()}};
  if (step_) j["step"] = *step_;
  return j;
}

ApiError to_api_error(const Error& e) {
  std::optional<std::size_t> step;
  if (const auto* pe = dynamic_cast<const PipelineError*>(&e)) step = pe->step();
  switch (e.code()) {
    case Errc::ConnectTimeout:
    case Errc::ReplyTimeout: return {ApiCode::Timeout, e.what()};
    case Errc::DroneError: return {ApiCode::DroneError, e.what()};
    case Errc::NotInSdkMode: return {ApiCode::NotConnected, e.what()};
    case Errc::NotFound: return {ApiCode::NotFound, e.what()};
    case Errc::NoFrameYet: return {ApiCode::NoFrameYet, e.what()};
    default: return {ApiCode::BadRequest, e.what(), step};
  }
}

void ServiceConfig::validate() const {
  if (!(fps > 0.0 && fps <= 60.0)) throw Error(Errc::BadParams, "fps must be in (0, 60]");
  if (connect_attempts < 1) throw Error(Errc::BadParams, "connect_attempts must be >= 1");
  if (telemetry_period.count() <= 0) throw Error(Errc::BadParams, "telemetry period must be > 0");
  if (data_dir.empty()) throw Error(Errc::BadParams, "data_dir is empty");
}

void apply_environment(ServiceConfig& cfg) {
  if (const char* dir = std::getenv("GCS_DATA_DIR"); dir && *dir) cfg.data_dir = dir;
}

struct GcsService::Impl {
  std::unique_ptr<SimServer> sim;  // set while cfg is prepared
  ServiceConfig cfg;
  SnapshotStore store;
  FrameBuffer buffer;
  CommandExecutor executor;

  // Telemetry is a model of the drone fed with every acknowledged command.
  mutable std::mutex shadow_mu;
  SimDroneState shadow;
  bool connected = false;
  int attempts = 0;

  std::mutex log_mu;
  json audit = json::array();
  json missions = json::array();
  std::vector<LinkEvent> link_events;
  const Clock::time_point started = Clock::now();

  std::unique_ptr<HttpServer> server;
  std::unique_ptr<FrameReceiver> receiver;

  std::mutex tick_mu;
  std::condition_variable tick_cv;
  bool ticking = true;
  std::thread telemetry;
  bool stopped = false;

  explicit Impl(ServiceConfig c) : cfg(prepare(std::move(c))), store(cfg.data_dir) {
    shadow = cfg.sim_mode ? cfg.sim.initial : SimDroneState{};
    server = std::make_unique<HttpServer>(
        cfg.http_bind, [this](const HttpRequest& r) { return handle(r); },
        [this] { return telemetry_json().dump(); });
    receiver = std::make_unique<FrameReceiver>(cfg.video_addr, buffer, [this](const FramePtr& f) {
      server->publish_frame(*f);
    });
    telemetry = std::thread([this] {
      std::unique_lock lock(tick_mu);
      while (ticking) {
        if (tick_cv.wait_for(lock, cfg.telemetry_period, [this] { return !ticking; })) break;
        lock.unlock();
        server->publish_text(telemetry_json().dump());
        lock.lock();
      }
    });
  }

  ServiceConfig prepare(ServiceConfig c) {
    c.validate();
    if (c.sim_mode) {
      auto sc = c.sim;
      sc.command_bind = {"127.0.0.1", 0};
      sc.frame_bind = {"127.0.0.1", 0};
      sc.fps = c.fps;
      sim = serve_endpoint(sc);
      c.sim = sc;
      c.drone_addr = {"127.0.0.1", sim->command_port()};
      c.video_addr = {"127.0.0.1", sim->frame_port()};
      c.local_bind = {"127.0.0.1", 0};
    }
    return c;
  }

  void stop() {
    if (stopped) return;
    stopped = true;
    {
      std::lock_guard lock(tick_mu);
      ticking = false;
    }
    tick_cv.notify_all();
    telemetry.join();
    receiver->stop();
    server->stop();
    executor.stop();
    if (sim) sim->stop();
  }

  LinkEndpoint endpoint() const {
    LinkEndpoint ep;
    ep.drone_addr = cfg.drone_addr;
    ep.local_bind = cfg.local_bind;
    ep.reply_timeout = cfg.reply_timeout;
    ep.max_retries = cfg.max_retries;
    return ep;
  }

  void observe(const CommandFrame& cmd, const ResponseFrame& reply) {
    std::lock_guard lock(shadow_mu);
    if (reply.is_value() && cmd.kind == CommandKind::QueryBattery) {
      shadow.battery = static_cast<int>(reply.value);
    } else if (reply.is_ok()) {
      auto [next, r] = step_command(shadow, cmd, cfg.sim.rules);
      if (r.is_ok()) shadow = next;
    }
  }

  json telemetry_json() const {
    std::lock_guard lock(shadow_mu);
    return {{"type", "telemetry"},
            {"connected", connected},
            {"phase", shadow.phase == FlightPhase::Flying ? "flying" : "grounded"},
            {"position", {{"x", shadow.x}, {"y", shadow.y}}},
            {"heading", shadow.heading},
            {"altitude", shadow.altitude},
            {"battery", shadow.battery},
            {"streaming", shadow.streaming}};
  }

  // Runs fn on the executor with a connected session and keeps a copy of
  // the link log for /log.
  template <class F>
  json with_session(F fn) {
    return executor.run([&](Link& l) -> json {
      if (!l.session) throw ApiError(ApiCode::NotConnected, "not connected; POST /connect first");
      struct Sync {
        Impl& self;
        Link& l;
        ~Sync() {
          if (!l.session) return;
          auto ev = l.session->events();
          std::lock_guard lock(self.log_mu);
          self.link_events = std::move(ev);
        }
      } sync{*this, l};
      return fn(*l.session, l);
    });
  }

  ResponseFrame command(LinkSession& s, const CommandFrame& cmd) {
    auto reply = send_command(s, cmd);
    observe(cmd, reply);
    return reply;
  }

  HttpResponse handle(const HttpRequest& req) {
    std::string path = req.target.substr(0, req.target.find('?'));
    if (path.size() > 1 && path.back() == '/') path.pop_back();
    HttpResponse res;
    try {
      res = route(req.method, path, req.body);
    } catch (const ApiError& e) {
      res = json_response(e.to_json(), http_status(e.code()));
    } catch (const Error& e) {
      const auto api = to_api_error(e);
      res = json_response(api.to_json(), http_status(api.code()));
    } catch (const std::future_error&) {
      res = json_response(ApiError(ApiCode::NotConnected, "service is shutting down").to_json(), 409);
    }
    if (req.method == "POST") {
      json entry{{"t_ms", std::chrono::duration_cast<milliseconds>(Clock::now() - started).count()},
                 {"request", req.method + " " + path},
                 {"status", res.status}};
      if (res.status >= 400) entry["error"] = json::parse(res.body, nullptr, false);
      std::lock_guard lock(log_mu);
      audit.push_back(std::move(entry));
    }
    return res;
  }

  HttpResponse route(const std::string& method, const std::string& path, const std::string& body) {
    static const std::string snap_prefix = "/snapshots/";
    if (method == "GET") {
      if (path == "/state") return json_response(state());
      if (path == "/snapshots") return json_response(list_snapshots());
      if (path == "/log") return json_response(log());
      if (path.starts_with(snap_prefix)) {
        auto id = path.substr(snap_prefix.size());
        if (id.ends_with("/meta"))
          return json_response(to_json(store.get(id.substr(0, id.size() - 5))));
        return snapshot_bytes(id);
      }
    } else if (method == "POST") {
      if (path == "/connect") return json_response(connect());
      if (path == "/disconnect") return json_response(disconnect());
      if (path == "/command") return json_response(send(parse_body(body)));
      if (path == "/snap") return json_response(to_json(store.snap(buffer, "manual")));
      if (path == "/process") return json_response(process(parse_body(body)));
      if (path == "/mission/square") return json_response(square(parse_body(body)));
      if (path == "/mission/script") return json_response(script(parse_body(body)));
    }
    throw ApiError(ApiCode::NotFound, "no route for " + method + " " + path);
  }

  json state() const {
    auto j = telemetry_json();
    j.erase("type");
    {
      std::lock_guard lock(shadow_mu);
      j["attempts"] = attempts;
    }
    j["drone"] = cfg.drone_addr.to_string();
    j["sim_mode"] = cfg.sim_mode;
    j["stream_clients"] = server->stream_clients();
    j["frames_malformed"] = buffer.malformed_count();
    if (auto f = buffer.latest()) j["latest_frame"] = {{"seq", f->seq}, {"timestamp", f->timestamp.count()}};
    else j["latest_frame"] = nullptr;
    return j;
  }

  json list_snapshots() const {
    auto arr = json::array();
    for (const auto& s : store.list()) arr.push_back(to_json(s));
    return arr;
  }

  json log() {
    std::lock_guard lock(log_mu);
    auto link = json::array();
    for (const auto& e : link_events)
      link.push_back({{"t_ms", e.at.count()}, {"direction", direction_name(e.direction)}, {"bytes", e.bytes}});
    return {{"audit", audit}, {"missions", missions}, {"link", link}};
  }

  HttpResponse snapshot_bytes(const std::string& id) const {
    const auto snap = store.get(id);
    std::ifstream in(snap.path, std::ios::binary);
    if (!in) throw ApiError(ApiCode::NotFound, "image file missing for " + id);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {200, "image/x-portable-pixmap", std::move(bytes)};
  }

  json connect() {
    return executor.run([&](Link& l) -> json {
      if (l.session) throw ApiError(ApiCode::BadRequest, "already connected");
      const auto ep = endpoint();
      auto result = connect_with_retry(ep, cfg.connect_attempts);
      l.session.emplace(std::move(result.session));
      l.attempts = result.attempts;
      {
        std::lock_guard lock(shadow_mu);
        connected = true;
        attempts = result.attempts;
        shadow.sdk_mode = true;
      }
      {
        auto ev = l.session->events();
        std::lock_guard lock(log_mu);
        link_events = std::move(ev);
      }
      return {{"connected", true},
              {"sdk_mode", l.session->sdk_mode()},
              {"attempts", result.attempts},
              {"drone", ep.drone_addr.to_string()}};
    });
  }

  json disconnect() {
    return with_session([&](LinkSession&, Link& l) -> json {
      l.session.reset();
      std::lock_guard lock(shadow_mu);
      connected = false;
      return {{"connected", false}};
    });
  }

  json send(const json& body) {
    if (!body.contains("command") || !body.at("command").is_string())
      throw ApiError(ApiCode::BadRequest, "expected {\"command\": \"<wire word>\"}");
    const auto cmd = decode_command(body.at("command").get<std::string>());
    validate(cmd);
    return with_session([&](LinkSession& s, Link&) -> json {
      const auto reply = command(s, cmd);
      json j{{"command", encode_command(cmd)}, {"reply", encode_response(reply)}};
      if (reply.is_value()) j["value"] = reply.value;
      return j;
    });
  }

  json process(const json& body) {
    if (!body.contains("snapshot_id") || !body.at("snapshot_id").is_string())
      throw ApiError(ApiCode::BadRequest, "snapshot_id must be a string");
    if (!body.contains("pipeline")) throw ApiError(ApiCode::BadRequest, "pipeline is required");
    const auto id = body.at("snapshot_id").get<std::string>();
    const auto source = store.get(id);
    const auto ops = pipeline_from_json(body.at("pipeline"));
    const auto result = apply_pipeline(AnyImage{store.image(id)}, ops);

    RgbImage out = std::visit(
        [](const auto& img) -> RgbImage {
          if constexpr (std::is_same_v<std::decay_t<decltype(img)>, GrayImage>) return gray_to_rgb(img);
          else return img;
        },
        result.image);
    auto lineage = source.lineage;
    lineage.insert(lineage.end(), result.lineage.begin(), result.lineage.end());
    const Frame frame{std::move(out), source.seq, milliseconds(source.timestamp_ms)};
    const auto snap = store.store(frame, source.mission, std::move(lineage), id);

    auto j = to_json(snap);
    j["output"] = std::holds_alternative<GrayImage>(result.image) ? "gray" : "rgb";
    for (auto it = result.lineage.rbegin(); it != result.lineage.rend(); ++it)
      if (it->bins) {
        j["bins"] = it->bins->bins;
        break;
      }
    return j;
  }

  json run_plan(const MissionPlan& plan) {
    return with_session([&](LinkSession& s, Link& l) -> json {
      bool streaming;
      {
        std::lock_guard lock(shadow_mu);
        streaming = shadow.streaming;
      }
      if (!streaming) command(s, CommandFrame::of(CommandKind::StreamOn));
      BufferFrameSource frames(buffer);
      StoreSink sink(store);
      auto opts = cfg.mission;
      opts.connect_attempts = l.attempts;
      opts.on_reply = [this](const CommandFrame& c, const ResponseFrame& r) { observe(c, r); };
      auto report = to_json(execute_mission(s, plan, frames, sink, opts));
      std::lock_guard lock(log_mu);
      missions.push_back(report);
      return report;
    });
  }

  json square(const json& body) {
    if (!body.contains("side_cm") || !body.at("side_cm").is_number_integer())
      throw ApiError(ApiCode::BadRequest, "side_cm must be an integer");
    return run_plan(build_square_mission(body.at("side_cm").get<int>()));
  }

  json script(const json& body) {
    if (!body.contains("script") || !body.at("script").is_string())
      throw ApiError(ApiCode::BadRequest, "script must be a string");
    auto plan = parse_script(body.at("script").get<std::string>(), body.value("name", "script"));
    plan.validate();
    return run_plan(plan);
  }
};

GcsService::GcsService(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
GcsService::~GcsService() { stop(); }

std::uint16_t GcsService::http_port() const { return impl_->server->port(); }
const ServiceConfig& GcsService::config() const { return impl_->cfg; }
SimServer* GcsService::simulator() const { return impl_->sim.get(); }
HttpResponse GcsService::handle(const HttpRequest& req) { return impl_->handle(req); }
void GcsService::stop() { impl_->stop(); }

}  // namespace gcs
