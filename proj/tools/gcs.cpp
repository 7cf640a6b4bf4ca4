#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gcs/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Prints the response and returns the process exit code.
int report(const httplib::Result& r) {
  if (!r) {
    std::cerr << "request failed: " << httplib::to_string(r.error()) << "\n";
    return 2;
  }
  auto j = json::parse(r->body, nullptr, false);
  auto& out = r->status >= 400 ? std::cerr : std::cout;
  out << (j.is_discarded() ? r->body : j.dump(2)) << "\n";
  return r->status >= 400 ? 1 : 0;
}

int serve(gcs::ServiceConfig cfg) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by every service thread

  gcs::GcsService service(std::move(cfg));
  const auto& c = service.config();
  std::cout << "listening on " << c.http_bind.host << ":" << service.http_port() << "\n"
            << "drone " << c.drone_addr.to_string() << (c.sim_mode ? " (simulated)" : "") << "\n"
            << "data  " << c.data_dir.string() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  std::cout << "stopping" << std::endl;
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground control station for a Tello-class drone"};
  app.require_subcommand(1);
  std::string server = "127.0.0.1:8080";
  app.add_option("--server", server, "Service address for client commands")->capture_default_str();

  gcs::ServiceConfig cfg;
  std::string http = "127.0.0.1:8080", drone = cfg.drone_addr.to_string(),
              local = cfg.local_bind.to_string(), video = cfg.video_addr.to_string(),
              data_dir = cfg.data_dir.string(), scene = "checkerboard";
  int settle_ms = 500, reply_ms = 7000;
  double salt_pepper = 0.0;
  std::uint64_t seed = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket service");
  serve_cmd->add_flag("--sim", cfg.sim_mode, "Start an embedded simulator and fly it");
  serve_cmd->add_option("--http", http, "HTTP bind address")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Snapshot directory (GCS_DATA_DIR overrides)")
      ->capture_default_str();
  serve_cmd->add_option("--fps", cfg.fps, "Simulator frame rate")->capture_default_str();
  serve_cmd->add_option("--drone", drone, "Drone command address")->capture_default_str();
  serve_cmd->add_option("--local", local, "Local UDP bind address")->capture_default_str();
  serve_cmd->add_option("--video", video, "Frame transport address")->capture_default_str();
  serve_cmd->add_option("--connect-attempts", cfg.connect_attempts)->capture_default_str();
  serve_cmd->add_option("--reply-timeout-ms", reply_ms)->capture_default_str();
  serve_cmd->add_option("--settle-ms", settle_ms, "Pause after each mission motion")
      ->capture_default_str();
  serve_cmd->add_option("--scene", scene, "Simulator scene")
      ->check(CLI::IsMember({"uniform", "checkerboard", "stepedge"}))
      ->capture_default_str();
  serve_cmd->add_option("--salt-pepper", salt_pepper, "Simulator salt-and-pepper probability")
      ->check(CLI::Range(0.0, 1.0));
  serve_cmd->add_option("--seed", seed, "Simulator noise seed");

  auto* connect_cmd = app.add_subcommand("connect", "Enter SDK mode on the drone");
  auto* disconnect_cmd = app.add_subcommand("disconnect", "Drop the drone session");
  auto* state_cmd = app.add_subcommand("state", "Show link and telemetry state");
  auto* snap_cmd = app.add_subcommand("snap", "Store the latest frame");
  auto* list_cmd = app.add_subcommand("list", "List snapshots");
  auto* log_cmd = app.add_subcommand("log", "Show the audit, mission and link logs");

  std::vector<std::string> words;
  auto* command_cmd = app.add_subcommand("command", "Send one wire command, e.g. `command cw 90`");
  command_cmd->add_option("words", words)->required();

  std::string id, out_path, pipeline_path;
  auto* get_cmd = app.add_subcommand("get", "Download a snapshot as PPM");
  get_cmd->add_option("--id", id)->required();
  get_cmd->add_option("--out", out_path, "Output file (default <id>.ppm)");

  auto* process_cmd = app.add_subcommand("process", "Run an enhancement pipeline on a snapshot");
  process_cmd->add_option("--id", id)->required();
  process_cmd->add_option("--pipeline", pipeline_path, "Pipeline JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  int side = 100;
  std::string script_path;
  auto* mission_cmd = app.add_subcommand("mission", "Fly a mission");
  mission_cmd->require_subcommand(1);
  auto* square_cmd = mission_cmd->add_subcommand("square", "Square mission with a capture per leg");
  square_cmd->add_option("--side", side, "Side length in cm")->capture_default_str();
  auto* script_cmd = mission_cmd->add_subcommand("run", "Run a mission script file");
  script_cmd->add_option("--script", script_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve_cmd->parsed()) {
      cfg.http_bind = gcs::NetAddress::parse(http);
      cfg.drone_addr = gcs::NetAddress::parse(drone);
      cfg.local_bind = gcs::NetAddress::parse(local);
      cfg.video_addr = gcs::NetAddress::parse(video);
      cfg.data_dir = data_dir;
      cfg.reply_timeout = std::chrono::milliseconds(reply_ms);
      cfg.mission.settle = std::chrono::milliseconds(settle_ms);
      if (scene == "uniform") cfg.sim.scene.kind = gcs::scenes::Uniform{};
      else if (scene == "stepedge") cfg.sim.scene.kind = gcs::scenes::StepEdge{};
      if (salt_pepper > 0.0) cfg.sim.noise = {gcs::noise::SaltPepper{salt_pepper}, seed};
      gcs::apply_environment(cfg);
      return serve(std::move(cfg));
    }

    const auto addr = gcs::NetAddress::parse(server);
    httplib::Client cli(addr.host, addr.port);
    cli.set_read_timeout(300, 0);
    auto post = [&](const std::string& path, const json& body = json::object()) {
      return report(cli.Post(path, body.dump(), "application/json"));
    };
    if (connect_cmd->parsed()) return post("/connect");
    if (disconnect_cmd->parsed()) return post("/disconnect");
    if (state_cmd->parsed()) return report(cli.Get("/state"));
    if (snap_cmd->parsed()) return post("/snap");
    if (list_cmd->parsed()) return report(cli.Get("/snapshots"));
    if (log_cmd->parsed()) return report(cli.Get("/log"));
    if (command_cmd->parsed()) {
      std::string text;
      for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
      return post("/command", {{"command", text}});
    }
    if (get_cmd->parsed()) {
      auto r = cli.Get("/snapshots/" + id);
      if (!r || r->status != 200) return report(r);
      const auto path = out_path.empty() ? id + ".ppm" : out_path;
      std::ofstream(path, std::ios::binary) << r->body;
      std::cout << path << "\n";
      return 0;
    }
    if (process_cmd->parsed())
      return post("/process", {{"snapshot_id", id}, {"pipeline", json::parse(read_file(pipeline_path))}});
    if (square_cmd->parsed()) return post("/mission/square", {{"side_cm", side}});
    if (script_cmd->parsed())
      return post("/mission/script", {{"name", script_path}, {"script", read_file(script_path)}});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
