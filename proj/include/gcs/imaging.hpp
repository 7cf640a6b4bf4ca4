#pragma once

#include <array>
#include <cstdint>
#include <numeric>

#include "gcs/image.hpp"

namespace gcs {

/// Size in bits of an uncompressed raster; throws Errc::Overflow when the
/// product does not fit in 64 bits.
std::uint64_t raw_image_bits(std::uint64_t width, std::uint64_t height,
                             std::uint64_t bits_per_pixel);

/// Luminance conversion with weights 0.2989/0.5870/0.1140, rounded half up.
GrayImage rgb_to_gray(const RgbImage& img);

/// v -> 255 - v on every channel.
template <int C>
Image<C> complement(const Image<C>& img) {
  Image<C> out = img;
  for (auto& v : out.bytes()) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

struct Histogram256 {
  std::array<std::uint64_t, 256> bins{};

  std::uint64_t total() const {
    return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
  }
  friend bool operator==(const Histogram256&, const Histogram256&) = default;
};

Histogram256 histogram(const GrayImage& img);

/// Contrast window + gamma. Values are normalized to [0,1], clamped to
/// [low_in, high_in], stretched to [0,1], raised to gamma and rescaled.
GrayImage gray_adjust(const GrayImage& img, double low_in, double high_in,
                      double gamma);

enum class FilterKind { Mean, Median };

/// k x k mean or median with edge-replicated borders. k must be odd,
/// 3 <= k <= min(width, height).
GrayImage noise_filter(const GrayImage& img, FilterKind kind, int k);

enum class EdgeOperator { Sobel, Prewitt, Canny };

struct EdgeParams {
  double threshold_frac = 0.25;  // sobel / prewitt, fraction of max magnitude
  double sigma = 1.4;            // canny smoothing
  double low = 0.1;              // canny hysteresis, fractions of max magnitude
  double high = 0.3;

  friend bool operator==(const EdgeParams&, const EdgeParams&) = default;
};

/// Binary (0/255) edge map.
GrayImage edge_detect(const GrayImage& img, EdgeOperator op,
                      const EdgeParams& params = {});

/// Lossless clockwise rotation by 90 degrees * turns.
template <int C>
Image<C> rotate_quarter(const Image<C>& img, int turns) {
  if (turns < 0 || turns > 3)
    throw Error(Errc::BadParams, "turns must be in 0..3");
  if (turns == 0) return img;
  const int w = img.width();
  const int h = img.height();
  const bool swap = turns % 2 == 1;
  Image<C> out(swap ? h : w, swap ? w : h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = 0, dy = 0;
      switch (turns) {
        case 1: dx = h - 1 - y; dy = x; break;
        case 2: dx = w - 1 - x; dy = h - 1 - y; break;
        case 3: dx = y; dy = w - 1 - x; break;
      }
      for (int c = 0; c < C; ++c) out.at(dx, dy, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace gcs
