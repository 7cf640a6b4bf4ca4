#include <random>
#include <set>

#include "doctest.h"
#include "gcs/error.hpp"
#include "gcs/protocol.hpp"

using namespace gcs;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected gcs::Error");
  return Errc::BadParams;
}

}  // namespace

TEST_CASE("golden wire table") {
  using K = CommandKind;
  const std::pair<CommandFrame, std::string> golden[] = {
      {CommandFrame::of(K::EnterSdkMode), "command"},
      {CommandFrame::of(K::Takeoff), "takeoff"},
      {CommandFrame::of(K::Land), "land"},
      {CommandFrame::of(K::Forward, 100), "forward 100"},
      {CommandFrame::of(K::Back, 20), "back 20"},
      {CommandFrame::of(K::Left, 500), "left 500"},
      {CommandFrame::of(K::Right, 75), "right 75"},
      {CommandFrame::of(K::Up, 30), "up 30"},
      {CommandFrame::of(K::Down, 40), "down 40"},
      {CommandFrame::of(K::RotateCw, 90), "cw 90"},
      {CommandFrame::of(K::RotateCcw, 360), "ccw 360"},
      {CommandFrame::of(K::StreamOn), "streamon"},
      {CommandFrame::of(K::StreamOff), "streamoff"},
      {CommandFrame::of(K::QueryBattery), "battery?"},
  };
  std::set<CommandKind> covered;
  for (const auto& [cmd, wire] : golden) {
    CHECK(encode_command(cmd) == wire);
    CHECK(decode_command(wire) == cmd);
    covered.insert(cmd.kind);
    for (char c : wire) CHECK((c >= 0x20 && c < 0x7f));
  }
  CHECK(covered.size() == std::size(kAllCommandKinds));
}

TEST_CASE("magnitude bounds") {
  using K = CommandKind;
  CHECK(code_of([] { encode_command(CommandFrame::of(K::Forward, 10)); }) == Errc::InvalidMagnitude);
  CHECK(code_of([] { encode_command(CommandFrame::of(K::Forward, 501)); }) == Errc::InvalidMagnitude);
  CHECK(code_of([] { encode_command(CommandFrame::of(K::Forward)); }) == Errc::InvalidMagnitude);
  CHECK(code_of([] { encode_command(CommandFrame::of(K::RotateCw, 0)); }) == Errc::InvalidMagnitude);
  CHECK(code_of([] { encode_command(CommandFrame::of(K::RotateCcw, 361)); }) == Errc::InvalidMagnitude);
  CHECK(code_of([] { encode_command(CommandFrame::of(K::Takeoff, 5)); }) == Errc::InvalidMagnitude);
  CHECK(encode_command(CommandFrame::of(K::Up, 20)) == "up 20");
  CHECK(encode_command(CommandFrame::of(K::RotateCw, 1)) == "cw 1");
}

TEST_CASE("decode rejects garbage") {
  for (auto bad : {"fly", "forward", "forward x", "takeoff now", "cw 9.5", ""})
    CHECK(code_of([&] { decode_command(bad); }) == Errc::UnknownCommand);
  // range is not decode's concern
  CHECK(decode_command("forward 10") == CommandFrame::of(CommandKind::Forward, 10));
}

TEST_CASE("parse_response grammar") {
  CHECK(parse_response("ok") == ResponseFrame::ok());
  CHECK(parse_response(" OK\r\n") == ResponseFrame::ok());
  CHECK(parse_response("87") == ResponseFrame::of_value(87));
  CHECK(parse_response("-3").value == -3);
  auto e = parse_response("error Not joined");
  CHECK(e.is_error());
  CHECK(e.text == "error Not joined");
  CHECK(parse_response("  okay ").text == "okay");
  CHECK(code_of([] { parse_response("  \r\n"); }) == Errc::EmptyDatagram);
  CHECK(code_of([] { parse_response(""); }) == Errc::EmptyDatagram);

  for (const auto& r : {ResponseFrame::ok(), ResponseFrame::of_value(42), ResponseFrame::error("x y")})
    CHECK(parse_response(encode_response(r)) == r);
}

TEST_CASE("encode_command is injective over valid frames") {
  std::set<std::string> wires;
  std::size_t frames = 0;
  for (auto kind : kAllCommandKinds) {
    if (is_translation(kind)) {
      for (int m = 20; m <= 500; ++m, ++frames) wires.insert(encode_command(CommandFrame::of(kind, m)));
    } else if (is_rotation(kind)) {
      for (int m = 1; m <= 360; ++m, ++frames) wires.insert(encode_command(CommandFrame::of(kind, m)));
    } else {
      ++frames;
      wires.insert(encode_command(CommandFrame::of(kind)));
    }
  }
  CHECK(wires.size() == frames);
}
