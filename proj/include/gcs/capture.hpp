#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <thread>

#include "gcs/image.hpp"
#include "gcs/link.hpp"

namespace gcs {

struct Frame {
  RgbImage image;
  std::uint64_t seq = 0;                 // strictly increasing per buffer
  std::chrono::milliseconds timestamp{};  // since the buffer was created
};

using FramePtr = std::shared_ptr<const Frame>;

/// Single-slot latest-frame holder. One writer, any number of readers;
/// readers get a shared immutable frame, never a partially written one.
class FrameBuffer {
 public:
  FrameBuffer();

  /// Decodes a transport payload and makes it the latest frame. Malformed
  /// payloads throw Error(MalformedFrame), are counted, and leave the held
  /// frame unchanged.
  FramePtr ingest(std::span<const std::uint8_t> payload);
  FramePtr ingest_image(RgbImage image);

  FramePtr latest() const;

  /// Blocks until a frame with seq > after_seq exists or the timeout
  /// expires (returns nullptr then).
  FramePtr wait_newer(std::uint64_t after_seq, std::chrono::milliseconds timeout) const;

  std::uint64_t malformed_count() const { return malformed_; }

 private:
  const std::chrono::steady_clock::time_point start_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  FramePtr latest_;
  std::uint64_t next_seq_ = 1;
  std::atomic<std::uint64_t> malformed_{0};
};

/// Pulls length-prefixed frame records from the simulator's TCP transport
/// into a FrameBuffer, reconnecting until stopped.
class FrameReceiver {
 public:
  using OnFrame = std::function<void(const FramePtr&)>;

  FrameReceiver(NetAddress source, FrameBuffer& buffer, OnFrame on_frame = {});
  ~FrameReceiver();
  FrameReceiver(const FrameReceiver&) = delete;
  FrameReceiver& operator=(const FrameReceiver&) = delete;

  bool connected() const { return connected_; }
  void stop();

 private:
  void run();

  NetAddress source_;
  FrameBuffer& buffer_;
  OnFrame on_frame_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> connected_{false};
  std::mutex sock_mu_;
  int native_ = -1;
  std::thread thread_;
};

}  // namespace gcs
