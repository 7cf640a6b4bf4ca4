#include "gcs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gcs/error.hpp"

namespace gcs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::pair<SimDroneState, ResponseFrame> reject(const SimDroneState& st, std::string_view why) {
  return {st, ResponseFrame::error(why)};
}

// Unit displacement for a travel direction in degrees (0 = +y, clockwise),
// exact for the four cardinal directions.
std::pair<int, int> displacement(int direction_deg, int distance) {
  switch (((direction_deg % 360) + 360) % 360) {
    case 0: return {0, distance};
    case 90: return {distance, 0};
    case 180: return {0, -distance};
    case 270: return {-distance, 0};
    default: {
      const double rad = direction_deg * std::numbers::pi / 180.0;
      return {static_cast<int>(std::lround(distance * std::sin(rad))),
              static_cast<int>(std::lround(distance * std::cos(rad)))};
    }
  }
}

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Portable uniform in [0, 1); std::uniform_real_distribution is not
// bit-identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

RgbImage gaussian_blur(const RgbImage& img, double sigma) {
  if (sigma == 0.0) return img;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (auto& v : k) v /= sum;

  const int w = img.width(), h = img.height();
  std::vector<double> tmp(img.bytes().size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i)
          acc += k[i + r] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * 3 + c];
        out.at(x, y, c) = clamp_u8(acc);
      }
  return out;
}

}  // namespace

std::pair<SimDroneState, ResponseFrame> step_command(const SimDroneState& st,
                                                     const CommandFrame& cmd,
                                                     const SimRules& rules) {
  if (!is_valid(cmd)) return reject(st, "out of range");
  if (cmd.kind == CommandKind::EnterSdkMode) {
    auto next = st;
    next.sdk_mode = true;
    return {next, ResponseFrame::ok()};
  }
  if (!st.sdk_mode) return reject(st, "not in sdk mode");

  auto next = st;
  const bool flying = st.phase == FlightPhase::Flying;
  const bool motion = cmd.kind == CommandKind::Takeoff || cmd.kind == CommandKind::Land ||
                      is_translation(cmd.kind) || is_rotation(cmd.kind);
  if (motion && cmd.kind != CommandKind::Land && st.battery <= 0)
    return reject(st, "battery low");

  switch (cmd.kind) {
    case CommandKind::Takeoff:
      if (flying) return reject(st, "already flying");
      next.phase = FlightPhase::Flying;
      next.altitude = rules.default_takeoff_alt;
      break;
    case CommandKind::Land:
      if (!flying) return reject(st, "not flying");
      next.phase = FlightPhase::Grounded;
      next.altitude = 0;
      break;
    case CommandKind::Forward:
    case CommandKind::Back:
    case CommandKind::Left:
    case CommandKind::Right: {
      if (!flying) return reject(st, "not flying");
      int offset = 0;
      if (cmd.kind == CommandKind::Back) offset = 180;
      if (cmd.kind == CommandKind::Left) offset = 270;
      if (cmd.kind == CommandKind::Right) offset = 90;
      const auto [dx, dy] = displacement(st.heading + offset, *cmd.magnitude);
      next.x += dx;
      next.y += dy;
      if (next.x < rules.arena_min || next.x > rules.arena_max || next.y < rules.arena_min ||
          next.y > rules.arena_max)
        return reject(st, "out of arena");
      break;
    }
    case CommandKind::Up:
    case CommandKind::Down: {
      if (!flying) return reject(st, "not flying");
      next.altitude += cmd.kind == CommandKind::Up ? *cmd.magnitude : -*cmd.magnitude;
      if (next.altitude < rules.min_altitude || next.altitude > rules.max_altitude)
        return reject(st, "altitude out of range");
      break;
    }
    case CommandKind::RotateCw:
    case CommandKind::RotateCcw: {
      if (!flying) return reject(st, "not flying");
      const int delta = cmd.kind == CommandKind::RotateCw ? *cmd.magnitude : -*cmd.magnitude;
      next.heading = ((st.heading + delta) % 360 + 360) % 360;
      break;
    }
    case CommandKind::StreamOn:
      next.streaming = true;
      return {next, ResponseFrame::ok()};
    case CommandKind::StreamOff:
      next.streaming = false;
      return {next, ResponseFrame::ok()};
    case CommandKind::QueryBattery:
      return {st, ResponseFrame::of_value(st.battery)};
    case CommandKind::EnterSdkMode:
      break;
  }
  if (motion) next.battery = std::max(0, st.battery - 1);
  return {next, ResponseFrame::ok()};
}

void SimScene::validate() const {
  if (width < 8 || height < 8) throw Error(Errc::BadParams, "scene frame must be at least 8x8");
  if (const auto* c = std::get_if<scenes::Checkerboard>(&kind); c && c->cell_px < 1)
    throw Error(Errc::BadParams, "checkerboard cell_px must be >= 1");
}

RgbImage render_frame(const SimDroneState& st, const SimScene& scene) {
  if (!st.streaming) throw Error(Errc::StreamOff, "video stream is off");
  scene.validate();
  RgbImage out(scene.width, scene.height);
  for (int v = 0; v < scene.height; ++v) {
    for (int u = 0; u < scene.width; ++u) {
      // moving north (+y) scrolls the ground down the image
      const int wx = u + st.x;
      const int wy = v - st.y;
      const Rgb c = std::visit(
          overloaded{
              [](const scenes::Uniform& s) { return Rgb{s.gray, s.gray, s.gray}; },
              [&](const scenes::Checkerboard& s) {
                const bool even = ((floor_div(wx, s.cell_px) + floor_div(wy, s.cell_px)) & 1) == 0;
                return even ? s.color_a : s.color_b;
              },
              [&](const scenes::StepEdge& s) {
                const auto g = wx < s.column ? s.left_val : s.right_val;
                return Rgb{g, g, g};
              },
          },
          scene.kind);
      out.at(u, v, 0) = c.r;
      out.at(u, v, 1) = c.g;
      out.at(u, v, 2) = c.b;
    }
  }
  return out;
}

void NoiseSpec::validate() const {
  std::visit(overloaded{
                 [](const noise::SaltPepper& n) {
                   if (!(n.p >= 0.0 && n.p <= 1.0))
                     throw Error(Errc::BadParams, "salt-and-pepper p must be in [0, 1]");
                 },
                 [](const noise::GaussianBlur& n) {
                   if (!(n.sigma >= 0.0)) throw Error(Errc::BadParams, "blur sigma must be >= 0");
                 },
                 [](const noise::AdditiveGaussian& n) {
                   if (!(n.sigma >= 0.0)) throw Error(Errc::BadParams, "noise sigma must be >= 0");
                 },
                 [](const noise::None&) {},
             },
             kind);
}

RgbImage inject_noise(const RgbImage& img, const NoiseSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  return std::visit(
      overloaded{
          [&](const noise::None&) { return img; },
          [&](const noise::SaltPepper& n) {
            RgbImage out = img;
            auto px = out.bytes();
            for (std::size_t i = 0; i < out.pixel_count(); ++i) {
              const bool hit = uniform01(rng) < n.p;
              const bool white = (rng() & 1u) != 0;
              if (hit) px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = white ? 255 : 0;
            }
            return out;
          },
          [&](const noise::GaussianBlur& n) { return gaussian_blur(img, n.sigma); },
          [&](const noise::AdditiveGaussian& n) {
            RgbImage out = img;
            for (auto& v : out.bytes()) v = clamp_u8(v + n.sigma * standard_normal(rng));
            return out;
          },
      },
      spec.kind);
}

}  // namespace gcs
