#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gcs/capture.hpp"
#include "gcs/error.hpp"
#include "gcs/link.hpp"
#include "gcs/snapshot_store.hpp"
#include "json.hpp"

namespace gcs {

namespace steps {
struct Fly {
  CommandFrame cmd;
  friend bool operator==(const Fly&, const Fly&) = default;
};
struct Capture {
  friend bool operator==(const Capture&, const Capture&) = default;
};
struct Wait {
  std::chrono::milliseconds duration{};
  friend bool operator==(const Wait&, const Wait&) = default;
};
}  // namespace steps

using MissionStep = std::variant<steps::Fly, steps::Capture, steps::Wait>;

std::string describe(const MissionStep& step);

struct MissionPlan {
  std::string name;
  std::vector<MissionStep> steps;

  /// Flight commands must start with takeoff and end with land, captures
  /// need a prior takeoff, and consecutive same-direction translations (one
  /// leg) may total at most 1000 cm. Throws Error(BadPlan).
  void validate() const;

  friend bool operator==(const MissionPlan&, const MissionPlan&) = default;
};

/// takeoff, 4 x (forward side, capture, cw 90), land. Legs longer than the
/// 500 cm single-command limit are split into equal forward moves.
/// Throws Error(SideOutOfRange) unless 20 <= side_cm <= 1000.
MissionPlan build_square_mission(int side_cm);

/// Line-oriented script: one step per line ("takeoff", "forward 100",
/// "capture", "cw 90", "wait 500", "land"); blank lines and '#' comments
/// are ignored. Throws Error(BadPlan) naming the line.
MissionPlan parse_script(std::string_view text, std::string name = "script");
std::string to_script(const MissionPlan& plan);

enum class EventKind { Connect, Start, Fly, Capture, Wait, AbortLand, Stop };
std::string_view to_string(EventKind k);

struct MissionEvent {
  std::chrono::milliseconds at{};
  EventKind kind;
  std::string step;
  bool ok = true;
  std::string outcome;
};

enum class MissionStatus { Completed, Aborted };

struct MissionReport {
  std::string mission;
  std::vector<MissionEvent> events;
  int frames_captured = 0;
  MissionStatus status = MissionStatus::Completed;
  std::string abort_reason;
  std::vector<std::string> snapshot_ids;

  bool completed() const { return status == MissionStatus::Completed; }
};

nlohmann::json to_json(const MissionReport& r);

/// Event order check: [connect] start? (fly|capture|wait)* [abort_land] stop,
/// no capture before the first successful takeoff, and an abort_land after
/// the failing step of every aborted report.
bool follows_mission_order(const MissionReport& r);

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Latest frame, waiting up to `timeout` if none has arrived yet.
  virtual FramePtr latest_frame(std::chrono::milliseconds timeout) = 0;
};

class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  /// Stores the frame and returns its snapshot id.
  virtual std::string accept(const Frame& frame, const std::string& mission) = 0;
};

/// Prefers a frame that arrives after the call so the picture reflects the
/// pose just reached; falls back to the latest one after `timeout`.
class BufferFrameSource : public FrameSource {
 public:
  explicit BufferFrameSource(const FrameBuffer& buffer) : buffer_(buffer) {}
  FramePtr latest_frame(std::chrono::milliseconds timeout) override;

 private:
  const FrameBuffer& buffer_;
};

class StoreSink : public SnapshotSink {
 public:
  explicit StoreSink(SnapshotStore& store) : store_(store) {}
  std::string accept(const Frame& frame, const std::string& mission) override;

 private:
  SnapshotStore& store_;
};

struct ExecuteOptions {
  std::chrono::milliseconds settle{500};  // pause after each motion
  std::chrono::milliseconds capture_timeout{2000};
  int connect_attempts = 0;  // > 0 logs a leading "connect" event
  std::function<void(const CommandFrame&, const ResponseFrame&)> on_reply;
};

/// Runs the plan step by step. Never throws: a failed flight command issues
/// a best-effort land and ends the report as Aborted; "stop" is always the
/// last event.
MissionReport execute_mission(LinkSession& session, const MissionPlan& plan,
                              FrameSource& frames, SnapshotSink& sink,
                              const ExecuteOptions& options = {});

struct ConnectResult {
  LinkSession session;
  int attempts;
};

/// Calls open_session up to `attempts` times and returns the first success.
/// on_failure runs after each failed attempt. Throws Error(ConnectTimeout).
ConnectResult connect_with_retry(
    const LinkEndpoint& ep, int attempts,
    const std::function<void(int attempt, const Error& err)>& on_failure = {});

}  // namespace gcs
