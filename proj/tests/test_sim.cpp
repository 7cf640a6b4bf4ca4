#include <random>

#include "doctest.h"
#include "gcs/error.hpp"
#include "gcs/frame_transport.hpp"
#include "gcs/sim.hpp"

using namespace gcs;
using K = CommandKind;

namespace {

SimDroneState flying_at(int x, int y, int heading = 0) {
  SimDroneState s;
  s.sdk_mode = true;
  s.phase = FlightPhase::Flying;
  s.altitude = 100;
  s.x = x;
  s.y = y;
  s.heading = heading;
  return s;
}

SimDroneState apply(SimDroneState s, const CommandFrame& c) { return step_command(s, c).first; }

CommandFrame random_command(std::mt19937& rng) {
  std::uniform_int_distribution<int> pick(0, std::size(kAllCommandKinds) - 1);
  const auto kind = kAllCommandKinds[pick(rng)];
  if (is_translation(kind)) return CommandFrame::of(kind, std::uniform_int_distribution<int>(0, 600)(rng));
  if (is_rotation(kind)) return CommandFrame::of(kind, std::uniform_int_distribution<int>(0, 400)(rng));
  return CommandFrame::of(kind);
}

}  // namespace

TEST_CASE("transition table examples") {
  SimDroneState grounded;
  grounded.sdk_mode = true;
  auto [up, r1] = step_command(grounded, CommandFrame::of(K::Takeoff));
  CHECK(r1.is_ok());
  CHECK(up.phase == FlightPhase::Flying);
  CHECK(up.altitude == SimRules{}.default_takeoff_alt);
  CHECK(up.altitude == 100);

  auto [moved, r2] = step_command(flying_at(100, 100), CommandFrame::of(K::Forward, 100));
  CHECK(r2.is_ok());
  CHECK(moved.y == 200);
  CHECK(moved.x == 100);

  auto s = flying_at(500, 500, 0);
  for (int i = 0; i < 4; ++i) s = apply(s, CommandFrame::of(K::RotateCw, 90));
  CHECK(s.heading == 0);

  // heading 90 faces +x; right of heading 0 is +x as well
  CHECK(apply(flying_at(100, 100, 90), CommandFrame::of(K::Forward, 50)).x == 150);
  CHECK(apply(flying_at(100, 100, 0), CommandFrame::of(K::Right, 50)).x == 150);
  CHECK(apply(flying_at(100, 100, 0), CommandFrame::of(K::Left, 50)).x == 50);
  CHECK(apply(flying_at(100, 100, 0), CommandFrame::of(K::Back, 50)).y == 50);
  CHECK(apply(flying_at(100, 100, 10), CommandFrame::of(K::RotateCcw, 20)).heading == 350);
  // non-cardinal heading rounds to whole centimetres
  auto diag = apply(flying_at(100, 100, 45), CommandFrame::of(K::Forward, 100));
  CHECK(diag.x == 171);
  CHECK(diag.y == 171);
}

TEST_CASE("guards leave state unchanged") {
  SimDroneState fresh;
  auto [s0, r0] = step_command(fresh, CommandFrame::of(K::Takeoff));
  CHECK(r0.is_error());
  CHECK(s0 == fresh);

  SimDroneState grounded;
  grounded.sdk_mode = true;
  for (auto cmd : {CommandFrame::of(K::Forward, 100), CommandFrame::of(K::Land),
                   CommandFrame::of(K::RotateCw, 90), CommandFrame::of(K::Up, 50)}) {
    auto [s, r] = step_command(grounded, cmd);
    CHECK(r.is_error());
    CHECK(s == grounded);
  }
  auto edge = flying_at(950, 0);
  auto [s1, r1] = step_command(edge, CommandFrame::of(K::Right, 100));
  CHECK(r1.is_error());
  CHECK(s1 == edge);
  auto [s2, r2] = step_command(flying_at(0, 0), CommandFrame::of(K::Down, 100));
  CHECK(r2.is_error());
  auto [s3, r3] = step_command(flying_at(0, 0), CommandFrame::of(K::Forward, 10));
  CHECK(r3.is_error());
}

TEST_CASE("battery drains one percent per motion and answers queries") {
  auto s = flying_at(100, 100);
  auto [q, r] = step_command(s, CommandFrame::of(K::QueryBattery));
  CHECK(r == ResponseFrame::of_value(100));
  s = apply(s, CommandFrame::of(K::Forward, 20));
  s = apply(s, CommandFrame::of(K::StreamOn));
  s = apply(s, CommandFrame::of(K::RotateCw, 90));
  CHECK(s.battery == 98);
  s.battery = 0;
  CHECK(step_command(s, CommandFrame::of(K::Forward, 20)).second.is_error());
  CHECK(step_command(s, CommandFrame::of(K::Land)).second.is_ok());
}

TEST_CASE("square closure from random flying poses") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int side = std::uniform_int_distribution<int>(20, 500)(rng);
    const int heading = 90 * std::uniform_int_distribution<int>(0, 3)(rng);
    // keep the whole square inside the arena
    const int x = std::uniform_int_distribution<int>(side, 1000 - side)(rng);
    const int y = std::uniform_int_distribution<int>(side, 1000 - side)(rng);
    const auto start = flying_at(x, y, heading);
    auto s = start;
    for (int leg = 0; leg < 4; ++leg) {
      auto [a, ra] = step_command(s, CommandFrame::of(K::Forward, side));
      REQUIRE(ra.is_ok());
      auto [b, rb] = step_command(a, CommandFrame::of(K::RotateCw, 90));
      REQUIRE(rb.is_ok());
      s = b;
    }
    CHECK(s.x == start.x);
    CHECK(s.y == start.y);
    CHECK(s.heading == start.heading);
  }
}

TEST_CASE("random command sequences keep invariants and are deterministic") {
  for (unsigned seed = 0; seed < 50; ++seed) {
    std::mt19937 rng(seed);
    std::vector<CommandFrame> cmds;
    for (int i = 0; i < 200; ++i) cmds.push_back(random_command(rng));

    auto run = [&] {
      SimDroneState s;
      std::vector<std::string> replies;
      for (const auto& c : cmds) {
        auto [next, reply] = step_command(s, c);
        REQUIRE(next.battery <= s.battery);
        REQUIRE(next.heading >= 0);
        REQUIRE(next.heading < 360);
        if (next.phase == FlightPhase::Grounded) REQUIRE(next.altitude == 0);
        REQUIRE_NOTHROW(parse_response(encode_response(reply)));
        replies.push_back(encode_response(reply));
        s = next;
      }
      return std::pair{s, replies};
    };
    CHECK(run() == run());
  }
}

TEST_CASE("render_frame") {
  SimDroneState s;
  SimScene scene{scenes::Uniform{128}, 16, 12};
  CHECK_THROWS_AS(render_frame(s, scene), Error);
  s.streaming = true;
  auto img = render_frame(s, scene);
  CHECK(img == RgbImage(16, 12, 128));

  const Rgb a{10, 20, 30}, b{200, 210, 220};
  SimScene board{scenes::Checkerboard{8, a, b}, 32, 32};
  auto frame = render_frame(s, board);
  CHECK(Rgb{frame.at(0, 0, 0), frame.at(0, 0, 1), frame.at(0, 0, 2)} == a);
  CHECK(Rgb{frame.at(8, 0, 0), frame.at(8, 0, 1), frame.at(8, 0, 2)} == b);
  CHECK(Rgb{frame.at(8, 8, 0), frame.at(8, 8, 1), frame.at(8, 8, 2)} == a);
  CHECK(render_frame(s, board) == frame);

  // the view moves with the drone
  auto moved = s;
  moved.x = 8;
  auto shifted = render_frame(moved, board);
  CHECK(shifted.at(0, 0, 0) == b.r);

  SimScene step{scenes::StepEdge{4, 0, 255}, 8, 8};
  auto st = render_frame(s, step);
  CHECK(st.at(3, 5, 0) == 0);
  CHECK(st.at(4, 5, 0) == 255);

  CHECK_THROWS_AS(render_frame(s, SimScene{scenes::Uniform{}, 7, 8}), Error);
  CHECK_THROWS_AS(render_frame(s, SimScene{scenes::Checkerboard{0}, 8, 8}), Error);
}

TEST_CASE("inject_noise") {
  RgbImage img(64, 64, 128);
  CHECK(inject_noise(img, {noise::SaltPepper{0.0}, 1}) == img);
  auto all = inject_noise(img, {noise::SaltPepper{1.0}, 1});
  for (auto v : all.bytes()) CHECK((v == 0 || v == 255));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto noisy = inject_noise(img, {noise::SaltPepper{0.05}, seed});
    std::size_t flipped = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) flipped += noisy.at(x, y, 0) != 128;
    const double frac = flipped / 4096.0;
    CHECK(frac >= 0.03);
    CHECK(frac <= 0.07);
  }
  const NoiseSpec sp{noise::SaltPepper{0.2}, 9};
  CHECK(inject_noise(img, sp) == inject_noise(img, sp));

  CHECK(inject_noise(img, {noise::GaussianBlur{0.0}, 0}) == img);
  CHECK(inject_noise(img, {noise::GaussianBlur{2.0}, 0}) == img);  // blur of a flat field
  auto g = inject_noise(img, {noise::AdditiveGaussian{10.0}, 4});
  CHECK(g != img);
  CHECK(g == inject_noise(img, {noise::AdditiveGaussian{10.0}, 4}));

  CHECK_THROWS_AS(inject_noise(img, {noise::SaltPepper{1.5}, 0}), Error);
  CHECK_THROWS_AS(inject_noise(img, {noise::GaussianBlur{-1.0}, 0}), Error);
}

TEST_CASE("frame transport payload") {
  RgbImage img(16, 16);
  std::mt19937 rng(2);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(rng());
  auto payload = encode_frame_payload(img);
  CHECK(payload.size() == 8 + 768);
  CHECK(std::string(payload.begin(), payload.begin() + 4) == "SIMF");
  CHECK(payload[4] == 0);
  CHECK(payload[5] == 16);
  CHECK(decode_frame_payload(payload) == img);

  auto record = encode_frame_record(img);
  CHECK(record.size() == 4 + payload.size());
  CHECK(record[2] == 0x03);  // 776 = 0x0308
  CHECK(record[3] == 0x08);

  auto truncated = payload;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_frame_payload(truncated), Error);
  auto bad_magic = payload;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_frame_payload(bad_magic), Error);
}
