#include "gcs/http_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "gcs/error.hpp"
#include "gcs/frame_transport.hpp"
#include "json.hpp"

namespace gcs {

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct FrameMessage {
  std::string header;
  std::vector<std::uint8_t> record;
};

class StreamSession;

class Hub {
 public:
  void add(const std::shared_ptr<StreamSession>& s) {
    std::lock_guard lock(mu_);
    sessions_.push_back(s);
  }

  template <class F>
  void for_each(F&& fn) {
    std::vector<std::shared_ptr<StreamSession>> live;
    {
      std::lock_guard lock(mu_);
      std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
      for (const auto& w : sessions_)
        if (auto s = w.lock()) live.push_back(std::move(s));
    }
    for (const auto& s : live) fn(*s);
  }

  std::size_t count() {
    std::lock_guard lock(mu_);
    std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
    return sessions_.size();
  }

 private:
  std::mutex mu_;
  std::vector<std::weak_ptr<StreamSession>> sessions_;
};

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  StreamSession(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start(http::request<http::string_body> req, std::string greeting) {
    req_ = std::move(req);
    if (!greeting.empty()) text_ = std::make_shared<const std::string>(std::move(greeting));
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.add(self);
      self->do_read();
      self->pump();
    });
  }

  void offer_frame(std::shared_ptr<const FrameMessage> msg) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)] {
      self->frame_ = msg;
      self->pump();
    });
  }

  void offer_text(std::shared_ptr<const std::string> msg) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)] {
      self->text_ = msg;
      self->pump();
    });
  }

 private:
  void do_read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->in_.consume(self->in_.size());
      self->do_read();
    });
  }

  void pump() {
    if (writing_ || closed_ || !ws_.is_open()) return;
    if (text_) {
      writing_ = true;
      auto msg = std::move(text_);
      ws_.text(true);
      ws_.async_write(asio::buffer(*msg),
                      [self = shared_from_this(), msg](beast::error_code ec, std::size_t) {
                        self->on_write(ec);
                      });
    } else if (frame_) {
      writing_ = true;
      auto msg = std::move(frame_);
      ws_.text(true);
      ws_.async_write(asio::buffer(msg->header), [self = shared_from_this(), msg](
                                                     beast::error_code ec, std::size_t) {
        if (ec) return self->on_write(ec);
        self->ws_.binary(true);
        self->ws_.async_write(asio::buffer(msg->record),
                              [self, msg](beast::error_code ec2, std::size_t) {
                                self->on_write(ec2);
                              });
      });
    }
  }

  void on_write(beast::error_code ec) {
    writing_ = false;
    if (ec) {
      closed_ = true;
      return;
    }
    pump();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  http::request<http::string_body> req_;
  beast::flat_buffer in_;
  std::shared_ptr<const std::string> text_;
  std::shared_ptr<const FrameMessage> frame_;
  bool writing_ = false;
  bool closed_ = false;
};

struct Shared {
  HttpServer::Handler handler;
  HttpServer::Greeting greeting;
  asio::thread_pool& workers;
  Hub& hub;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Shared& shared)
      : stream_(std::move(socket)), shared_(shared) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(64 * 1024 * 1024);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    auto req = parser_->release();

    if (websocket::is_upgrade(req)) {
      if (req.target() == "/stream") {
        stream_.expires_never();
        auto greeting = shared_.greeting ? shared_.greeting() : std::string();
        std::make_shared<StreamSession>(stream_.release_socket(), shared_.hub)
            ->start(std::move(req), std::move(greeting));
        return;
      }
      return respond(req.version(), false, {404, "application/json",
                                            R"({"code":"NotFound","detail":"no such stream"})"});
    }
    const auto version = req.version();
    const bool keep_alive = req.keep_alive();
    if (req.method() == http::verb::options) return respond(version, keep_alive, {204, "", ""});

    HttpRequest request{std::string(req.method_string()), std::string(req.target()),
                        std::move(req.body())};
    asio::post(shared_.workers, [self = shared_from_this(), request = std::move(request),
                                 version, keep_alive] {
      HttpResponse res;
      try {
        res = self->shared_.handler(request);
      } catch (const std::exception& e) {
        res = {500, "application/json",
               nlohmann::json{{"code", "Internal"}, {"detail", e.what()}}.dump()};
      }
      asio::post(self->stream_.get_executor(), [self, res = std::move(res), version, keep_alive] {
        self->respond(version, keep_alive, res);
      });
    });
  }

  void respond(unsigned version, bool keep_alive, const HttpResponse& r) {
    auto res = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(r.status), version);
    res->set(http::field::server, "gcs");
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_headers, "Content-Type");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    if (!r.content_type.empty()) res->set(http::field::content_type, r.content_type);
    res->body() = r.body;
    res->keep_alive(keep_alive);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Shared& shared_;
};

}  // namespace

struct HttpServer::Impl {
  asio::io_context ioc;
  asio::thread_pool workers;
  Hub hub;
  Shared shared;
  tcp::acceptor acceptor;
  std::uint16_t port = 0;
  std::vector<std::thread> threads;
  bool stopped = false;

  Impl(int worker_threads, Handler handler, Greeting greeting)
      : workers(static_cast<std::size_t>(worker_threads)),
        shared{std::move(handler), std::move(greeting), workers, hub},
        acceptor(asio::make_strand(ioc)) {}

  void do_accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(s), shared)->run();
      do_accept();
    });
  }
};

HttpServer::HttpServer(const NetAddress& bind, Handler handler, Greeting greeting,
                       int io_threads, int worker_threads)
    : impl_(std::make_unique<Impl>(worker_threads, std::move(handler), std::move(greeting))) {
  beast::error_code ec;
  const auto addr = asio::ip::make_address(bind.host == "localhost" ? "127.0.0.1" : bind.host, ec);
  if (ec) throw Error(Errc::BadEndpoint, "bad http address " + bind.to_string());
  const tcp::endpoint ep(addr, bind.port);
  auto& acc = impl_->acceptor;
  acc.open(ep.protocol(), ec);
  if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(ep, ec);
  if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::BindFailure, "cannot listen on " + bind.to_string() + ": " + ec.message());
  impl_->port = acc.local_endpoint().port();
  impl_->do_accept();
  for (int i = 0; i < std::max(1, io_threads); ++i)
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::port() const { return impl_->port; }

void HttpServer::publish_frame(const Frame& frame) {
  auto msg = std::make_shared<FrameMessage>();
  msg->header = nlohmann::json{{"type", "frame"},
                               {"seq", frame.seq},
                               {"timestamp", frame.timestamp.count()},
                               {"width", frame.image.width()},
                               {"height", frame.image.height()}}
                    .dump();
  msg->record = encode_frame_record(frame.image);
  std::shared_ptr<const FrameMessage> shared = std::move(msg);
  impl_->hub.for_each([&](StreamSession& s) { s.offer_frame(shared); });
}

void HttpServer::publish_text(std::string text) {
  auto shared = std::make_shared<const std::string>(std::move(text));
  impl_->hub.for_each([&](StreamSession& s) { s.offer_text(shared); });
}

std::size_t HttpServer::stream_clients() const { return impl_->hub.count(); }

void HttpServer::stop() {
  if (!impl_ || impl_->stopped) return;
  impl_->stopped = true;
  impl_->workers.join();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
}

}  // namespace gcs
