#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcs/error.hpp"

namespace gcs {

/// Row-major 8-bit raster with a fixed channel count.
template <int Channels>
class Image {
  static_assert(Channels == 1 || Channels == 3);

 public:
  static constexpr int channels = Channels;

  Image() = default;

  Image(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  Image(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * Channels)
      throw Error(Errc::BadParams, "pixel buffer length does not match dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }
  const std::vector<std::uint8_t>& buffer() const noexcept { return pixels_; }

  std::uint8_t& at(int x, int y, int c = 0) noexcept {
    return pixels_[index(x, y, c)];
  }
  std::uint8_t at(int x, int y, int c = 0) const noexcept {
    return pixels_[index(x, y, c)];
  }

  std::span<const std::uint8_t> row(int y) const noexcept {
    return std::span<const std::uint8_t>(pixels_).subspan(
        static_cast<std::size_t>(y) * width_ * Channels,
        static_cast<std::size_t>(width_) * Channels);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  static void check_dims(int width, int height) {
    if (width < 1 || height < 1)
      throw Error(Errc::BadParams, "image dimensions must be >= 1");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using RgbImage = Image<3>;
using GrayImage = Image<1>;

/// A GrayImage is binary when every value is 0 or 255.
inline bool is_binary(const GrayImage& img) {
  for (auto v : img.bytes())
    if (v != 0 && v != 255) return false;
  return true;
}

/// Replicates a gray image into three identical channels.
inline RgbImage gray_to_rgb(const GrayImage& img) {
  RgbImage out(img.width(), img.height());
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  return out;
}

}  // namespace gcs
