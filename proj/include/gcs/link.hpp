#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gcs/protocol.hpp"

namespace gcs {

/// Numeric IPv4 address plus UDP/TCP port. "localhost" is accepted as an
/// alias for 127.0.0.1.
struct NetAddress {
  std::string host;
  std::uint16_t port = 0;

  /// Parses "a.b.c.d:port". Throws Error(BadEndpoint).
  static NetAddress parse(std::string_view text);
  std::string to_string() const { return host + ":" + std::to_string(port); }

  friend bool operator==(const NetAddress&, const NetAddress&) = default;
};

struct LinkEndpoint {
  NetAddress drone_addr{"192.168.10.1", 8889};
  NetAddress local_bind{"0.0.0.0", 9000};
  std::chrono::milliseconds reply_timeout{7000};
  int max_retries = 3;

  /// Ports in [1, 65535] (local port 0 = ephemeral is allowed for tests),
  /// reply_timeout > 0, max_retries >= 1. Throws Error(BadEndpoint).
  void validate() const;
};

enum class LinkDirection { Outbound, Inbound, Timeout, Stale };

struct LinkEvent {
  std::chrono::milliseconds at;  // since the session socket was opened
  LinkDirection direction;
  std::string bytes;
};

/// A command session with one drone. Commands are strictly serialized:
/// a command is sent only after the previous one was answered or timed out.
class LinkSession {
 public:
  LinkSession(LinkSession&&) noexcept;
  LinkSession& operator=(LinkSession&&) noexcept;
  ~LinkSession();

  const LinkEndpoint& endpoint() const;
  bool sdk_mode() const;
  std::uint64_t last_seq() const;
  std::vector<LinkEvent> events() const;
  std::uint16_t local_port() const;

  /// See send_command().
  ResponseFrame send(const CommandFrame& cmd);

 private:
  struct Impl;
  explicit LinkSession(std::unique_ptr<Impl> impl);
  friend LinkSession open_session(const LinkEndpoint& ep);

  std::unique_ptr<Impl> impl_;
};

/// Binds local_bind, then sends "command" up to max_retries times.
/// Errors: BindFailure, ConnectTimeout.
LinkSession open_session(const LinkEndpoint& ep);

/// Sends one command and blocks for its reply. Ok and Value replies are
/// returned; an Error reply throws Error(DroneError), no reply within
/// reply_timeout throws Error(ReplyTimeout). Out-of-range magnitudes throw
/// Error(InvalidMagnitude) before anything is sent.
ResponseFrame send_command(LinkSession& s, const CommandFrame& cmd);

/// True when no two Outbound records appear without an Inbound or Timeout
/// record between them.
bool is_serialized(const std::vector<LinkEvent>& events);

}  // namespace gcs
