#include "gcs/mission.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <thread>

namespace gcs {

namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool is_motion(CommandKind k) {
  return k == CommandKind::Takeoff || k == CommandKind::Land || k == CommandKind::Up ||
         k == CommandKind::Down || is_translation(k) || is_rotation(k);
}

[[noreturn]] void bad_plan(std::size_t index, const std::string& why) {
  throw Error(Errc::BadPlan, "step " + std::to_string(index + 1) + ": " + why);
}

std::optional<CommandKind> kind_for_word(std::string_view word) {
  for (auto k : kAllCommandKinds)
    if (wire_word(k) == word) return k;
  return std::nullopt;
}

class Recorder {
 public:
  explicit Recorder(MissionReport& r) : report_(r), t0_(Clock::now()) {}
  void log(EventKind kind, std::string step, bool ok, std::string outcome) {
    report_.events.push_back({std::chrono::duration_cast<milliseconds>(Clock::now() - t0_), kind,
                              std::move(step), ok, std::move(outcome)});
  }

 private:
  MissionReport& report_;
  Clock::time_point t0_;
};

}  // namespace

std::string describe(const MissionStep& step) {
  return std::visit(overloaded{
                        [](const steps::Fly& f) { return encode_command(f.cmd); },
                        [](const steps::Capture&) { return std::string("capture"); },
                        [](const steps::Wait& w) {
                          return "wait " + std::to_string(w.duration.count());
                        },
                    },
                    step);
}

void MissionPlan::validate() const {
  bool airborne = false;
  std::optional<std::size_t> last_motion, last_land;
  // one-way distance per direction within the current leg
  std::map<CommandKind, int> leg;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    if (std::holds_alternative<steps::Capture>(step) && !airborne)
      bad_plan(i, "capture before takeoff");
    if (const auto* w = std::get_if<steps::Wait>(&step); w && w->duration.count() < 0)
      bad_plan(i, "negative wait");
    const auto* fly = std::get_if<steps::Fly>(&step);
    if (!fly) continue;
    if (!is_valid(fly->cmd)) bad_plan(i, "magnitude out of range for " + std::string(wire_word(fly->cmd.kind)));
    const auto kind = fly->cmd.kind;
    if (!airborne && kind != CommandKind::Takeoff && is_motion(kind))
      bad_plan(i, "first flight command must be takeoff");
    if (kind == CommandKind::Takeoff) airborne = true;
    if (kind == CommandKind::Land) last_land = i;
    else if (is_motion(kind)) last_motion = i;

    if (is_translation(kind)) {
      if ((leg[kind] += *fly->cmd.magnitude) > 1000)
        bad_plan(i, "leg exceeds 1000 cm in one direction");
    } else if (is_motion(kind)) {
      leg.clear();
    }
  }
  if (last_motion && (!last_land || *last_land < *last_motion))
    bad_plan(steps.size() - 1, "plan must land after its last motion");
}

MissionPlan build_square_mission(int side_cm) {
  if (side_cm < 20 || side_cm > 1000)
    throw Error(Errc::SideOutOfRange,
                "side " + std::to_string(side_cm) + " cm outside [20, 1000]");
  MissionPlan plan{"square-" + std::to_string(side_cm), {}};
  plan.steps.push_back(steps::Fly{CommandFrame::of(CommandKind::Takeoff)});
  const int chunks = (side_cm + 499) / 500;
  for (int leg = 0; leg < 4; ++leg) {
    for (int c = 0; c < chunks; ++c) {
      // spread the remainder over the first chunks
      const int d = side_cm / chunks + (c < side_cm % chunks ? 1 : 0);
      plan.steps.push_back(steps::Fly{CommandFrame::of(CommandKind::Forward, d)});
    }
    plan.steps.push_back(steps::Capture{});
    plan.steps.push_back(steps::Fly{CommandFrame::of(CommandKind::RotateCw, 90)});
  }
  plan.steps.push_back(steps::Fly{CommandFrame::of(CommandKind::Land)});
  return plan;
}

MissionPlan parse_script(std::string_view text, std::string name) {
  MissionPlan plan{std::move(name), {}};
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string word, arg, extra;
    if (!(words >> word)) continue;
    words >> arg >> extra;
    auto fail = [&](const std::string& why) -> void {
      throw Error(Errc::BadPlan, "line " + std::to_string(lineno) + ": " + why);
    };
    if (!extra.empty()) fail("too many fields");
    if (word == "capture") {
      if (!arg.empty()) fail("capture takes no argument");
      plan.steps.push_back(steps::Capture{});
    } else if (word == "wait") {
      long ms = -1;
      auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), ms);
      if (arg.empty() || ec != std::errc{} || p != arg.data() + arg.size() || ms < 0)
        fail("wait needs a non-negative millisecond count");
      plan.steps.push_back(steps::Wait{milliseconds(ms)});
    } else {
      const auto kind = kind_for_word(word);
      if (!kind) fail("unknown step \"" + word + "\"");
      try {
        plan.steps.push_back(
            steps::Fly{decode_command(arg.empty() ? word : word + " " + arg)});
      } catch (const Error& e) {
        fail(e.what());
      }
    }
  }
  return plan;
}

std::string to_script(const MissionPlan& plan) {
  std::string out = "# " + plan.name + "\n";
  for (const auto& step : plan.steps) out += describe(step) + "\n";
  return out;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Connect: return "connect";
    case EventKind::Start: return "start";
    case EventKind::Fly: return "fly";
    case EventKind::Capture: return "capture";
    case EventKind::Wait: return "wait";
    case EventKind::AbortLand: return "abort_land";
    case EventKind::Stop: return "stop";
  }
  return "?";
}

nlohmann::json to_json(const MissionReport& r) {
  auto events = nlohmann::json::array();
  for (const auto& e : r.events)
    events.push_back({{"t_ms", e.at.count()},
                      {"kind", to_string(e.kind)},
                      {"step", e.step},
                      {"ok", e.ok},
                      {"outcome", e.outcome}});
  nlohmann::json j{{"mission", r.mission},
                   {"status", r.completed() ? "completed" : "aborted"},
                   {"frames_captured", r.frames_captured},
                   {"snapshots", r.snapshot_ids},
                   {"events", events}};
  if (!r.completed()) j["reason"] = r.abort_reason;
  return j;
}

bool follows_mission_order(const MissionReport& r) {
  const auto& ev = r.events;
  std::size_t i = 0;
  if (i < ev.size() && ev[i].kind == EventKind::Connect) ++i;
  if (i < ev.size() && ev[i].kind == EventKind::Start) ++i;
  bool took_off = false;
  std::optional<std::size_t> failed;
  for (; i < ev.size(); ++i) {
    const auto k = ev[i].kind;
    if (k == EventKind::Fly) {
      if (failed) return false;
      if (!ev[i].ok) failed = i;
      if (ev[i].ok && ev[i].step == "takeoff") took_off = true;
    } else if (k == EventKind::Capture) {
      if (!took_off || failed) return false;
    } else if (k == EventKind::Wait) {
      if (failed) return false;
    } else {
      break;
    }
  }
  if (i < ev.size() && ev[i].kind == EventKind::AbortLand) {
    if (r.completed()) return false;
    ++i;
  } else if (!r.completed() && failed) {
    return false;  // flight failure without a land attempt
  }
  if (r.completed() && failed) return false;
  return i + 1 == ev.size() && ev[i].kind == EventKind::Stop;
}

FramePtr BufferFrameSource::latest_frame(milliseconds timeout) {
  auto current = buffer_.latest();
  auto fresh = buffer_.wait_newer(current ? current->seq : 0, timeout);
  return fresh ? fresh : current;
}

std::string StoreSink::accept(const Frame& frame, const std::string& mission) {
  return store_.store(frame, mission).id;
}

MissionReport execute_mission(LinkSession& session, const MissionPlan& plan,
                              FrameSource& frames, SnapshotSink& sink,
                              const ExecuteOptions& options) {
  MissionReport report;
  report.mission = plan.name;
  Recorder rec(report);
  if (options.connect_attempts > 0)
    rec.log(EventKind::Connect, "connect", true,
            "sdk mode after " + std::to_string(options.connect_attempts) + " attempt(s)");
  rec.log(EventKind::Start, "start", true, plan.name);

  auto abort = [&](std::string reason) {
    report.status = MissionStatus::Aborted;
    report.abort_reason = std::move(reason);
  };

  try {
    plan.validate();
  } catch (const Error& e) {
    abort(e.what());
    rec.log(EventKind::Stop, "stop", false, report.abort_reason);
    return report;
  }

  for (const auto& step : plan.steps) {
    const auto what = describe(step);
    if (const auto* fly = std::get_if<steps::Fly>(&step)) {
      try {
        auto reply = send_command(session, fly->cmd);
        if (options.on_reply) options.on_reply(fly->cmd, reply);
        rec.log(EventKind::Fly, what, true, encode_response(reply));
      } catch (const Error& e) {
        rec.log(EventKind::Fly, what, false, e.what());
        abort(what + ": " + e.what());
        try {
          const auto land = CommandFrame::of(CommandKind::Land);
          auto reply = send_command(session, land);
          if (options.on_reply) options.on_reply(land, reply);
          rec.log(EventKind::AbortLand, "land", true, encode_response(reply));
        } catch (const Error& le) {
          rec.log(EventKind::AbortLand, "land", false, le.what());
        }
        break;
      }
      if (is_motion(fly->cmd.kind) && fly->cmd.kind != CommandKind::Land &&
          options.settle.count() > 0)
        std::this_thread::sleep_for(options.settle);
    } else if (std::holds_alternative<steps::Capture>(step)) {
      auto frame = frames.latest_frame(options.capture_timeout);
      if (!frame) {
        rec.log(EventKind::Capture, what, false, "no frame within capture timeout");
        continue;
      }
      try {
        auto id = sink.accept(*frame, plan.name);
        ++report.frames_captured;
        report.snapshot_ids.push_back(id);
        rec.log(EventKind::Capture, what, true, id);
      } catch (const std::exception& e) {
        rec.log(EventKind::Capture, what, false, e.what());
      }
    } else {
      std::this_thread::sleep_for(std::get<steps::Wait>(step).duration);
      rec.log(EventKind::Wait, what, true, "");
    }
  }
  rec.log(EventKind::Stop, "stop", report.completed(),
          report.completed() ? "completed" : report.abort_reason);
  return report;
}

ConnectResult connect_with_retry(
    const LinkEndpoint& ep, int attempts,
    const std::function<void(int attempt, const Error& err)>& on_failure) {
  if (attempts < 1) throw Error(Errc::BadParams, "connect attempts must be >= 1");
  for (int attempt = 1;; ++attempt) {
    try {
      return {open_session(ep), attempt};
    } catch (const Error& e) {
      if (e.code() != Errc::ConnectTimeout) throw;
      if (on_failure) on_failure(attempt, e);
      if (attempt == attempts)
        throw Error(Errc::ConnectTimeout,
                    "no reply after " + std::to_string(attempts) + " connect attempts");
    }
  }
}

}  // namespace gcs
