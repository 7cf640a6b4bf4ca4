#include "gcs/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "gcs/error.hpp"

namespace gcs {

namespace {

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) || c == '\0'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

bool is_translation(CommandKind k) {
  switch (k) {
    case CommandKind::Forward:
    case CommandKind::Back:
    case CommandKind::Left:
    case CommandKind::Right:
    case CommandKind::Up:
    case CommandKind::Down:
      return true;
    default:
      return false;
  }
}

bool is_rotation(CommandKind k) {
  return k == CommandKind::RotateCw || k == CommandKind::RotateCcw;
}

bool is_query(CommandKind k) { return k == CommandKind::QueryBattery; }

std::string_view wire_word(CommandKind k) {
  switch (k) {
    case CommandKind::EnterSdkMode: return "command";
    case CommandKind::Takeoff: return "takeoff";
    case CommandKind::Land: return "land";
    case CommandKind::Forward: return "forward";
    case CommandKind::Back: return "back";
    case CommandKind::Left: return "left";
    case CommandKind::Right: return "right";
    case CommandKind::Up: return "up";
    case CommandKind::Down: return "down";
    case CommandKind::RotateCw: return "cw";
    case CommandKind::RotateCcw: return "ccw";
    case CommandKind::StreamOn: return "streamon";
    case CommandKind::StreamOff: return "streamoff";
    case CommandKind::QueryBattery: return "battery?";
  }
  return "";
}

void validate(const CommandFrame& cmd) {
  const auto word = std::string(wire_word(cmd.kind));
  if (is_translation(cmd.kind)) {
    if (!cmd.magnitude || *cmd.magnitude < 20 || *cmd.magnitude > 500)
      throw Error(Errc::InvalidMagnitude, word + ": distance must be in [20, 500] cm");
  } else if (is_rotation(cmd.kind)) {
    if (!cmd.magnitude || *cmd.magnitude < 1 || *cmd.magnitude > 360)
      throw Error(Errc::InvalidMagnitude, word + ": angle must be in [1, 360] deg");
  } else if (cmd.magnitude) {
    throw Error(Errc::InvalidMagnitude, word + " takes no magnitude");
  }
}

bool is_valid(const CommandFrame& cmd) noexcept {
  try {
    validate(cmd);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string encode_command(const CommandFrame& cmd) {
  validate(cmd);
  std::string out(wire_word(cmd.kind));
  if (cmd.magnitude) {
    out += ' ';
    out += std::to_string(*cmd.magnitude);
  }
  return out;
}

CommandFrame decode_command(std::string_view text) {
  text = trim(text);
  const auto space = text.find(' ');
  const auto word = text.substr(0, space);
  const auto rest = space == std::string_view::npos ? std::string_view{}
                                                    : trim(text.substr(space + 1));
  for (auto kind : kAllCommandKinds) {
    if (word != wire_word(kind)) continue;
    if (!takes_magnitude(kind)) {
      if (!rest.empty())
        throw Error(Errc::UnknownCommand, "unexpected argument: " + std::string(text));
      return CommandFrame::of(kind);
    }
    auto n = parse_int<int>(rest);
    if (!n) throw Error(Errc::UnknownCommand, "bad magnitude: " + std::string(text));
    return CommandFrame::of(kind, *n);
  }
  throw Error(Errc::UnknownCommand, "unknown command: " + std::string(text));
}

ResponseFrame ResponseFrame::error(std::string_view detail) {
  std::string t = "error";
  if (!detail.empty()) {
    t += ' ';
    t += detail;
  }
  return {Variant::Error, std::move(t), 0};
}

ResponseFrame parse_response(std::string_view raw) {
  const auto t = trim(raw);
  if (t.empty()) throw Error(Errc::EmptyDatagram, "empty reply datagram");
  if (iequals(t, "ok")) return ResponseFrame::ok();
  if (auto n = parse_int<std::int64_t>(t); n && t.front() != '+')
    return ResponseFrame::of_value(*n);
  return {ResponseFrame::Variant::Error, std::string(t), 0};
}

std::string encode_response(const ResponseFrame& r) {
  switch (r.variant) {
    case ResponseFrame::Variant::Ok: return "ok";
    case ResponseFrame::Variant::Value: return std::to_string(r.value);
    case ResponseFrame::Variant::Error: return r.text.empty() ? "error" : r.text;
  }
  return "error";
}

std::string to_string(const ResponseFrame& r) { return encode_response(r); }

}  // namespace gcs
