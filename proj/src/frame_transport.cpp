#include "gcs/frame_transport.hpp"

#include <algorithm>

#include "gcs/error.hpp"

namespace gcs {

std::vector<std::uint8_t> encode_frame_payload(const RgbImage& img) {
  if (img.width() > 0xFFFF || img.height() > 0xFFFF)
    throw Error(Errc::BadParams, "frame dimensions exceed 16 bits");
  std::vector<std::uint8_t> out(kFrameHeaderSize + img.bytes().size());
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  out[4] = static_cast<std::uint8_t>(img.width() >> 8);
  out[5] = static_cast<std::uint8_t>(img.width() & 0xFF);
  out[6] = static_cast<std::uint8_t>(img.height() >> 8);
  out[7] = static_cast<std::uint8_t>(img.height() & 0xFF);
  std::copy(img.bytes().begin(), img.bytes().end(), out.begin() + kFrameHeaderSize);
  return out;
}

RgbImage decode_frame_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() < kFrameHeaderSize ||
      !std::equal(kFrameMagic.begin(), kFrameMagic.end(), payload.begin()))
    throw Error(Errc::MalformedFrame, "frame record lacks the SIMF magic");
  const int w = (payload[4] << 8) | payload[5];
  const int h = (payload[6] << 8) | payload[7];
  const std::size_t expected = kFrameHeaderSize + static_cast<std::size_t>(w) * h * 3;
  if (w == 0 || h == 0 || payload.size() != expected)
    throw Error(Errc::MalformedFrame, "frame record length " + std::to_string(payload.size()) +
                                          " does not match " + std::to_string(w) + "x" +
                                          std::to_string(h));
  auto px = payload.subspan(kFrameHeaderSize);
  return RgbImage(w, h, std::vector<std::uint8_t>(px.begin(), px.end()));
}

std::vector<std::uint8_t> encode_frame_record(const RgbImage& img) {
  const auto payload = encode_frame_payload(img);
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::vector<std::uint8_t> out(4 + payload.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::copy(payload.begin(), payload.end(), out.begin() + 4);
  return out;
}

}  // namespace gcs
