#include "gcs/capture.hpp"
#include "gcs/error.hpp"
#include "gcs/frame_transport.hpp"

namespace gcs {

FrameBuffer::FrameBuffer() : start_(std::chrono::steady_clock::now()) {}

FramePtr FrameBuffer::ingest(std::span<const std::uint8_t> payload) {
  RgbImage img;
  try {
    img = decode_frame_payload(payload);
  } catch (const Error&) {
    ++malformed_;
    throw;
  }
  return ingest_image(std::move(img));
}

FramePtr FrameBuffer::ingest_image(RgbImage image) {
  auto frame = std::make_shared<Frame>();
  frame->image = std::move(image);
  frame->timestamp = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start_);
  {
    std::lock_guard lock(mu_);
    frame->seq = next_seq_++;
    latest_ = frame;
  }
  cv_.notify_all();
  return frame;
}

FramePtr FrameBuffer::latest() const {
  std::lock_guard lock(mu_);
  return latest_;
}

FramePtr FrameBuffer::wait_newer(std::uint64_t after_seq,
                                 std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return latest_ && latest_->seq > after_seq; });
  if (latest_ && latest_->seq > after_seq) return latest_;
  return nullptr;
}

}  // namespace gcs
