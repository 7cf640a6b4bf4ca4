#include "gcs/link.hpp"

#include <array>
#include <boost/asio.hpp>
#include <charconv>
#include <mutex>

#include "gcs/error.hpp"

namespace gcs {

namespace asio = boost::asio;
using asio::ip::udp;
using Clock = std::chrono::steady_clock;

NetAddress NetAddress::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(Errc::BadEndpoint, "expected host:port, got \"" + std::string(text) + "\"");
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || p != port_text.data() + port_text.size() || port > 65535)
    throw Error(Errc::BadEndpoint, "bad port in \"" + std::string(text) + "\"");
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

void LinkEndpoint::validate() const {
  if (drone_addr.port == 0) throw Error(Errc::BadEndpoint, "drone port must be in [1, 65535]");
  if (reply_timeout.count() <= 0) throw Error(Errc::BadEndpoint, "reply_timeout must be > 0");
  if (max_retries < 1) throw Error(Errc::BadEndpoint, "max_retries must be >= 1");
}

namespace {

asio::ip::address to_address(const std::string& host) {
  boost::system::error_code ec;
  auto a = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw Error(Errc::BadEndpoint, "not an IPv4 address: " + host);
  return a;
}

}  // namespace

struct LinkSession::Impl {
  LinkEndpoint ep;
  asio::io_context io;
  udp::socket socket{io};
  udp::endpoint drone;
  Clock::time_point opened = Clock::now();
  bool sdk_mode = false;
  std::uint64_t seq = 0;
  std::vector<LinkEvent> log;
  mutable std::mutex mu;

  explicit Impl(const LinkEndpoint& e) : ep(e) {
    drone = udp::endpoint(to_address(ep.drone_addr.host), ep.drone_addr.port);
    const udp::endpoint local(to_address(ep.local_bind.host), ep.local_bind.port);
    boost::system::error_code ec;
    socket.open(udp::v4(), ec);
    if (!ec) socket.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) socket.bind(local, ec);
    if (ec)
      throw Error(Errc::BindFailure,
                  "cannot bind " + ep.local_bind.to_string() + ": " + ec.message());
  }

  void record(LinkDirection d, std::string bytes) {
    log.push_back({std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - opened),
                   d, std::move(bytes)});
  }

  // Drops replies that arrived after their command timed out, so they are
  // not matched to the next command.
  void drain_stale() {
    std::array<char, 2048> buf;
    udp::endpoint from;
    boost::system::error_code ec;
    socket.non_blocking(true);
    for (;;) {
      const auto n = socket.receive_from(asio::buffer(buf), from, 0, ec);
      if (ec) break;
      record(LinkDirection::Stale, std::string(buf.data(), n));
    }
    socket.non_blocking(false);
  }

  std::optional<std::string> receive_until(Clock::time_point deadline) {
    std::array<char, 2048> buf;
    while (Clock::now() < deadline) {
      udp::endpoint from;
      std::optional<std::size_t> got;
      boost::system::error_code rec;
      io.restart();
      socket.async_receive_from(asio::buffer(buf), from,
                                [&](boost::system::error_code ec, std::size_t n) {
                                  rec = ec;
                                  if (!ec) got = n;
                                });
      io.run_until(deadline);
      if (!got && !rec) {
        socket.cancel();
        io.restart();
        io.run();
      }
      if (got) {
        // the protocol has no addressing; only the drone's replies count
        if (from == drone) return std::string(buf.data(), *got);
        continue;
      }
      if (rec && rec != asio::error::operation_aborted) continue;
      break;
    }
    return std::nullopt;
  }

  // Sends one datagram and waits for the matching reply. Returns nullopt on
  // timeout.
  std::optional<ResponseFrame> exchange(const std::string& wire) {
    drain_stale();
    boost::system::error_code ec;
    socket.send_to(asio::buffer(wire), drone, 0, ec);
    ++seq;
    record(LinkDirection::Outbound, wire);
    if (ec) {
      record(LinkDirection::Timeout, "send failed: " + ec.message());
      return std::nullopt;
    }
    const auto deadline = Clock::now() + ep.reply_timeout;
    for (;;) {
      auto raw = receive_until(deadline);
      if (!raw) {
        record(LinkDirection::Timeout, "");
        return std::nullopt;
      }
      try {
        auto reply = parse_response(*raw);
        record(LinkDirection::Inbound, *raw);
        return reply;
      } catch (const Error&) {
        // blank datagram, not a reply
        record(LinkDirection::Stale, *raw);
      }
    }
  }
};

LinkSession::LinkSession(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
LinkSession::LinkSession(LinkSession&&) noexcept = default;
LinkSession& LinkSession::operator=(LinkSession&&) noexcept = default;
LinkSession::~LinkSession() = default;

const LinkEndpoint& LinkSession::endpoint() const { return impl_->ep; }

bool LinkSession::sdk_mode() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sdk_mode;
}

std::uint64_t LinkSession::last_seq() const {
  std::lock_guard lock(impl_->mu);
  return impl_->seq;
}

std::vector<LinkEvent> LinkSession::events() const {
  std::lock_guard lock(impl_->mu);
  return impl_->log;
}

std::uint16_t LinkSession::local_port() const { return impl_->socket.local_endpoint().port(); }

ResponseFrame LinkSession::send(const CommandFrame& cmd) {
  const auto wire = encode_command(cmd);  // validates the magnitude
  std::lock_guard lock(impl_->mu);
  if (!impl_->sdk_mode && cmd.kind != CommandKind::EnterSdkMode)
    throw Error(Errc::NotInSdkMode, "session is not in SDK mode; send \"command\" first");
  auto reply = impl_->exchange(wire);
  if (!reply)
    throw Error(Errc::ReplyTimeout, "no reply to \"" + wire + "\" within " +
                                        std::to_string(impl_->ep.reply_timeout.count()) + " ms");
  if (reply->is_error()) throw Error(Errc::DroneError, reply->text);
  if (cmd.kind == CommandKind::EnterSdkMode) impl_->sdk_mode = true;
  return *reply;
}

LinkSession open_session(const LinkEndpoint& ep) {
  ep.validate();
  auto impl = std::make_unique<LinkSession::Impl>(ep);
  const auto wire = encode_command(CommandFrame::of(CommandKind::EnterSdkMode));
  for (int attempt = 0; attempt < ep.max_retries; ++attempt) {
    auto reply = impl->exchange(wire);
    if (reply && reply->is_ok()) {
      impl->sdk_mode = true;
      return LinkSession(std::move(impl));
    }
  }
  throw Error(Errc::ConnectTimeout, "no \"ok\" from " + ep.drone_addr.to_string() + " after " +
                                        std::to_string(ep.max_retries) + " attempts");
}

ResponseFrame send_command(LinkSession& s, const CommandFrame& cmd) { return s.send(cmd); }

bool is_serialized(const std::vector<LinkEvent>& events) {
  bool awaiting = false;
  for (const auto& e : events) {
    switch (e.direction) {
      case LinkDirection::Outbound:
        if (awaiting) return false;
        awaiting = true;
        break;
      case LinkDirection::Inbound:
      case LinkDirection::Timeout:
        awaiting = false;
        break;
      case LinkDirection::Stale:
        break;
    }
  }
  return true;
}

}  // namespace gcs
