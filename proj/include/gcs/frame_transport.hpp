#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gcs/image.hpp"

namespace gcs {

// Simulator video transport. A payload is an 8-byte header ("SIMF", u16
// width, u16 height, big-endian) followed by raw RGB24 rows. On the TCP
// stream every payload is preceded by its u32 big-endian length.

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'S', 'I', 'M', 'F'};
inline constexpr std::size_t kFrameHeaderSize = 8;

std::vector<std::uint8_t> encode_frame_payload(const RgbImage& img);

/// Throws Error(MalformedFrame) on bad magic or a length that does not match
/// the header dimensions.
RgbImage decode_frame_payload(std::span<const std::uint8_t> payload);

/// Length prefix + payload, as written on the stream.
std::vector<std::uint8_t> encode_frame_record(const RgbImage& img);

}  // namespace gcs
