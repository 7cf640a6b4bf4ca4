#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gcs/link.hpp"
#include "gcs/sim.hpp"

namespace gcs {

/// Makes the simulator answer the n-th (1-based) command of `kind` with an
/// Error reply instead of executing it.
struct FaultRule {
  CommandKind kind;
  int occurrence = 1;
  std::string message = "injected fault";
};

struct SimConfig {
  NetAddress command_bind{"0.0.0.0", 8889};
  NetAddress frame_bind{"0.0.0.0", 11111};  // TCP video transport
  SimRules rules;
  SimDroneState initial;
  SimScene scene;
  NoiseSpec noise;  // frame k is corrupted with seed noise.seed + k
  double fps = 5.0;
  std::vector<FaultRule> faults;
};

/// Running simulator. Commands are handled one at a time in arrival order
/// on a single thread; frames are published from a second thread while the
/// stream is on. Destruction stops both.
class SimServer {
 public:
  ~SimServer();
  SimServer(const SimServer&) = delete;
  SimServer& operator=(const SimServer&) = delete;

  std::uint16_t command_port() const;
  std::uint16_t frame_port() const;

  /// Copy of the current state; never torn.
  SimDroneState state() const;
  std::uint64_t frames_published() const;
  std::uint64_t commands_handled() const;

  void stop();

 private:
  struct Impl;
  explicit SimServer(std::unique_ptr<Impl> impl);
  friend std::unique_ptr<SimServer> serve_endpoint(const SimConfig& cfg);

  std::unique_ptr<Impl> impl_;
};

/// Binds the command (UDP) and frame (TCP) ports and starts serving.
/// Port 0 picks an ephemeral port. Throws Error(BindFailure).
std::unique_ptr<SimServer> serve_endpoint(const SimConfig& cfg);

}  // namespace gcs
