#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "gcs/capture.hpp"
#include "gcs/link.hpp"

namespace gcs {

struct HttpRequest {
  std::string method;
  std::string target;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP and WebSocket on one port. Requests run on a worker pool so slow
/// handlers never stall the socket threads. WebSocket clients connect to
/// /stream and receive text messages plus, per frame, a JSON header
/// followed by the binary transport record. Each client holds at most one
/// pending frame and one pending text message; newer ones replace them.
class HttpServer {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  using Greeting = std::function<std::string()>;

  /// Throws Error(BindFailure).
  HttpServer(const NetAddress& bind, Handler handler, Greeting greeting = {},
             int io_threads = 2, int worker_threads = 4);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  std::uint16_t port() const;
  void publish_frame(const Frame& frame);
  void publish_text(std::string text);
  std::size_t stream_clients() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gcs
