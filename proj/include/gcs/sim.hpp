#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include "gcs/image.hpp"
#include "gcs/protocol.hpp"

namespace gcs {

enum class FlightPhase { Grounded, Flying };

/// Pose and protocol state of the emulated drone. Ground frame in cm:
/// heading 0 faces +y, angles grow clockwise (90 faces +x).
struct SimDroneState {
  FlightPhase phase = FlightPhase::Grounded;
  int x = 0;
  int y = 0;
  int heading = 0;   // [0, 360)
  int altitude = 0;  // cm, 0 when grounded
  int battery = 100; // percent
  bool sdk_mode = false;
  bool streaming = false;

  friend bool operator==(const SimDroneState&, const SimDroneState&) = default;
};

struct SimRules {
  int default_takeoff_alt = 100;
  int arena_min = 0;  // both axes, cm
  int arena_max = 1000;
  int min_altitude = 20;
  int max_altitude = 1000;
};

/// One protocol step. Illegal commands are answered with an Error reply and
/// leave the state untouched.
std::pair<SimDroneState, ResponseFrame> step_command(const SimDroneState& st,
                                                     const CommandFrame& cmd,
                                                     const SimRules& rules = {});

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace scenes {
struct Uniform {
  std::uint8_t gray = 128;
};
struct Checkerboard {
  int cell_px = 8;
  Rgb color_a{0, 0, 0};
  Rgb color_b{255, 255, 255};
};
struct StepEdge {
  int column = 0;  // first column with right_val at the origin pose
  std::uint8_t left_val = 0;
  std::uint8_t right_val = 255;
};
}  // namespace scenes

struct SimScene {
  std::variant<scenes::Uniform, scenes::Checkerboard, scenes::StepEdge> kind =
      scenes::Checkerboard{};
  int width = 128;
  int height = 96;

  void validate() const;
};

/// Camera view of the scene. The camera is north-up: the view is the scene
/// translated by the drone position (1 px per cm), heading does not rotate
/// it. Throws Error(StreamOff) when the stream is off.
RgbImage render_frame(const SimDroneState& st, const SimScene& scene);

namespace noise {
struct None {};
struct SaltPepper {
  double p = 0.05;
};
struct GaussianBlur {
  double sigma = 1.0;
};
struct AdditiveGaussian {
  double sigma = 10.0;
};
}  // namespace noise

struct NoiseSpec {
  std::variant<noise::None, noise::SaltPepper, noise::GaussianBlur, noise::AdditiveGaussian>
      kind = noise::None{};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seeded corruption; the same (image, spec) always yields the same bytes.
/// Salt-and-pepper replaces whole pixels with black or white at equal odds.
RgbImage inject_noise(const RgbImage& img, const NoiseSpec& spec);

}  // namespace gcs
