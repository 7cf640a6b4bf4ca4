#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "gcs/http_server.hpp"
#include "gcs/mission.hpp"
#include "gcs/sim_server.hpp"

namespace gcs {

enum class ApiCode { NotConnected, BadRequest, NotFound, DroneError, Timeout, NoFrameYet };

std::string_view to_string(ApiCode code);
int http_status(ApiCode code);

class ApiError : public std::runtime_error {
 public:
  ApiError(ApiCode code, const std::string& detail, std::optional<std::size_t> step = {})
      : std::runtime_error(detail), code_(code), step_(step) {}

  ApiCode code() const noexcept { return code_; }
  std::optional<std::size_t> step() const noexcept { return step_; }
  nlohmann::json to_json() const;

 private:
  ApiCode code_;
  std::optional<std::size_t> step_;
};

/// Maps a library error onto the HTTP error vocabulary.
ApiError to_api_error(const Error& e);

struct ServiceConfig {
  NetAddress drone_addr{"192.168.10.1", 8889};
  NetAddress local_bind{"0.0.0.0", 9000};
  NetAddress video_addr{"192.168.10.1", 11111};  // TCP frame transport
  bool sim_mode = false;
  NetAddress http_bind{"127.0.0.1", 8080};
  std::filesystem::path data_dir = "data";
  double fps = 5.0;
  std::chrono::milliseconds reply_timeout{7000};
  int max_retries = 3;
  int connect_attempts = 3;
  ExecuteOptions mission;
  std::chrono::milliseconds telemetry_period{500};
  SimConfig sim;  // scene, noise and faults of the embedded simulator

  /// Throws Error(BadParams).
  void validate() const;
};

/// Applies GCS_DATA_DIR if set.
void apply_environment(ServiceConfig& cfg);

/// The ground station: one drone link behind a single command executor,
/// a frame receiver feeding the latest-frame buffer and the /stream
/// clients, and the snapshot store.
class GcsService {
 public:
  explicit GcsService(ServiceConfig cfg);
  ~GcsService();
  GcsService(const GcsService&) = delete;
  GcsService& operator=(const GcsService&) = delete;

  std::uint16_t http_port() const;
  /// Effective configuration; in sim mode the addresses point at the
  /// embedded simulator.
  const ServiceConfig& config() const;
  /// Embedded simulator, or nullptr.
  SimServer* simulator() const;

  /// Routes one request. Failures come back as an ApiError body.
  HttpResponse handle(const HttpRequest& req);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gcs
