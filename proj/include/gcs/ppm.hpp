#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gcs/image.hpp"

namespace gcs {

// Binary PPM (P6), 8-bit only. Writers emit "P6\n<w> <h>\n255\n" + pixels.

std::vector<std::uint8_t> encode_ppm(const RgbImage& img);

/// Accepts comments and arbitrary whitespace in the header. Throws
/// Error(MalformedPpm) for anything but a complete 8-bit P6 image.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Throws Error(IoFailure).
void save_image(const RgbImage& img, const std::filesystem::path& path);
RgbImage load_image(const std::filesystem::path& path);

}  // namespace gcs
