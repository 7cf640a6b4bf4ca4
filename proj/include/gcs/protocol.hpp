#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gcs {

enum class CommandKind {
  EnterSdkMode,
  Takeoff,
  Land,
  Forward,
  Back,
  Left,
  Right,
  Up,
  Down,
  RotateCw,
  RotateCcw,
  StreamOn,
  StreamOff,
  QueryBattery,
};

inline constexpr CommandKind kAllCommandKinds[] = {
    CommandKind::EnterSdkMode, CommandKind::Takeoff,   CommandKind::Land,
    CommandKind::Forward,      CommandKind::Back,      CommandKind::Left,
    CommandKind::Right,        CommandKind::Up,        CommandKind::Down,
    CommandKind::RotateCw,     CommandKind::RotateCcw, CommandKind::StreamOn,
    CommandKind::StreamOff,    CommandKind::QueryBattery,
};

bool is_translation(CommandKind k);
bool is_rotation(CommandKind k);
bool is_query(CommandKind k);
inline bool takes_magnitude(CommandKind k) { return is_translation(k) || is_rotation(k); }

/// The wire word without magnitude, e.g. "forward" or "battery?".
std::string_view wire_word(CommandKind k);

/// One request of the drone text protocol. Translations carry centimetres
/// in [20, 500], rotations degrees in [1, 360], every other kind nothing.
struct CommandFrame {
  CommandKind kind = CommandKind::EnterSdkMode;
  std::optional<int> magnitude;

  static CommandFrame of(CommandKind k) { return {k, std::nullopt}; }
  static CommandFrame of(CommandKind k, int m) { return {k, m}; }

  friend bool operator==(const CommandFrame&, const CommandFrame&) = default;
};

/// Throws Error(InvalidMagnitude) when the frame breaks its range rules.
void validate(const CommandFrame& cmd);
bool is_valid(const CommandFrame& cmd) noexcept;

/// ASCII wire form, no terminator: "command", "forward 100", "cw 90", ...
std::string encode_command(const CommandFrame& cmd);

/// Inverse of encode_command for well-formed text. Unknown words or
/// malformed magnitudes raise Error(UnknownCommand). The magnitude range is
/// not checked here; callers that need it call validate().
CommandFrame decode_command(std::string_view text);

struct ResponseFrame {
  enum class Variant { Ok, Error, Value };

  Variant variant = Variant::Ok;
  std::string text;     // Error only, never empty
  std::int64_t value = 0;  // Value only

  static ResponseFrame ok() { return {}; }
  static ResponseFrame error(std::string_view detail);
  static ResponseFrame of_value(std::int64_t n) { return {Variant::Value, {}, n}; }

  bool is_ok() const noexcept { return variant == Variant::Ok; }
  bool is_error() const noexcept { return variant == Variant::Error; }
  bool is_value() const noexcept { return variant == Variant::Value; }

  friend bool operator==(const ResponseFrame&, const ResponseFrame&) = default;
};

/// "ok" (any case, trimmed) -> Ok; decimal integer -> Value; anything else
/// -> Error(trimmed text). Throws Error(EmptyDatagram) on blank input.
ResponseFrame parse_response(std::string_view raw);

/// Reply wire form used by the simulator: "ok", "error ...", or the integer.
std::string encode_response(const ResponseFrame& r);

std::string to_string(const ResponseFrame& r);

}  // namespace gcs
