#include <sys/socket.h>

#include <array>
#include <boost/asio.hpp>

#include "gcs/capture.hpp"
#include "gcs/error.hpp"

namespace gcs {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {
constexpr std::uint32_t kMaxRecord = 64u << 20;
}

FrameReceiver::FrameReceiver(NetAddress source, FrameBuffer& buffer, OnFrame on_frame)
    : source_(std::move(source)), buffer_(buffer), on_frame_(std::move(on_frame)) {
  thread_ = std::thread([this] { run(); });
}

FrameReceiver::~FrameReceiver() { stop(); }

void FrameReceiver::stop() {
  stop_ = true;
  {
    std::lock_guard lock(sock_mu_);
    if (native_ >= 0) ::shutdown(native_, SHUT_RDWR);
  }
  if (thread_.joinable()) thread_.join();
}

void FrameReceiver::run() {
  asio::io_context io;
  boost::system::error_code ec;
  const auto host = source_.host == "localhost" ? std::string("127.0.0.1") : source_.host;
  const auto addr = asio::ip::make_address(host, ec);
  if (ec) return;
  const tcp::endpoint ep(addr, source_.port);

  while (!stop_) {
    tcp::socket sock(io);
    sock.connect(ep, ec);
    if (ec) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      continue;
    }
    {
      std::lock_guard lock(sock_mu_);
      native_ = sock.native_handle();
      if (stop_) ::shutdown(native_, SHUT_RDWR);
    }
    connected_ = true;
    std::vector<std::uint8_t> payload;
    while (!stop_) {
      std::array<std::uint8_t, 4> len_be{};
      asio::read(sock, asio::buffer(len_be), ec);
      if (ec) break;
      const std::uint32_t len = (std::uint32_t{len_be[0]} << 24) | (std::uint32_t{len_be[1]} << 16) |
                                (std::uint32_t{len_be[2]} << 8) | len_be[3];
      if (len > kMaxRecord) break;  // stream is out of sync; reconnect
      payload.resize(len);
      asio::read(sock, asio::buffer(payload), ec);
      if (ec) break;
      try {
        auto frame = buffer_.ingest(payload);
        if (on_frame_) on_frame_(frame);
      } catch (const Error&) {
        // malformed record: counted by the buffer, dropped here
      }
    }
    connected_ = false;
    {
      std::lock_guard lock(sock_mu_);
      native_ = -1;
    }
    sock.close(ec);
  }
}

}  // namespace gcs
