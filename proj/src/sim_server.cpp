#include "gcs/sim_server.hpp"

#include <array>
#include <atomic>
#include <boost/asio.hpp>
#include <condition_variable>
#include <list>
#include <map>
#include <mutex>
#include <thread>

#include "gcs/error.hpp"
#include "gcs/frame_transport.hpp"

namespace gcs {

namespace asio = boost::asio;
using asio::ip::tcp;
using asio::ip::udp;

namespace {

asio::ip::address to_address(const std::string& host) {
  boost::system::error_code ec;
  auto a = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw Error(Errc::BadEndpoint, "not an IPv4 address: " + host);
  return a;
}

}  // namespace

struct SimServer::Impl {
  SimConfig cfg;
  asio::io_context io;
  udp::socket command_socket{io};
  tcp::acceptor frame_acceptor{io};
  std::array<char, 2048> rx_buf{};
  udp::endpoint rx_from;

  mutable std::mutex state_mu;
  SimDroneState state;
  std::map<CommandKind, int> seen;
  std::atomic<std::uint64_t> commands{0};

  // Accepted sockets land in `pending` (io thread) and are adopted by the
  // publisher, so a slow frame client never stalls command handling.
  std::mutex pending_mu;
  std::list<tcp::socket> pending;
  std::mutex clients_mu;
  std::list<tcp::socket> clients;
  std::atomic<std::uint64_t> published{0};

  std::mutex run_mu;
  std::condition_variable run_cv;
  bool running = true;
  std::thread io_thread;
  std::thread publisher;
  std::uint16_t cmd_port = 0;
  std::uint16_t frm_port = 0;

  explicit Impl(const SimConfig& c) : cfg(c), state(c.initial) {
    cfg.scene.validate();
    cfg.noise.validate();
    if (!(cfg.fps > 0.0)) throw Error(Errc::BadParams, "fps must be > 0");

    boost::system::error_code ec;
    const udp::endpoint cmd_ep(to_address(cfg.command_bind.host), cfg.command_bind.port);
    command_socket.open(udp::v4(), ec);
    if (!ec) command_socket.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) command_socket.bind(cmd_ep, ec);
    if (ec)
      throw Error(Errc::BindFailure,
                  "simulator cannot bind " + cfg.command_bind.to_string() + ": " + ec.message());

    const tcp::endpoint frame_ep(to_address(cfg.frame_bind.host), cfg.frame_bind.port);
    frame_acceptor.open(tcp::v4(), ec);
    if (!ec) frame_acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) frame_acceptor.bind(frame_ep, ec);
    if (!ec) frame_acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec)
      throw Error(Errc::BindFailure,
                  "simulator cannot bind frames " + cfg.frame_bind.to_string() + ": " + ec.message());
    cmd_port = command_socket.local_endpoint().port();
    frm_port = frame_acceptor.local_endpoint().port();
  }

  void start() {
    receive_next();
    accept_next();
    io_thread = std::thread([this] { io.run(); });
    publisher = std::thread([this] { publish_loop(); });
  }

  void receive_next() {
    command_socket.async_receive_from(
        asio::buffer(rx_buf), rx_from, [this](boost::system::error_code ec, std::size_t n) {
          if (ec == asio::error::operation_aborted) return;
          if (!ec) {
            const auto reply = encode_response(handle(std::string_view(rx_buf.data(), n)));
            boost::system::error_code send_ec;
            command_socket.send_to(asio::buffer(reply), rx_from, 0, send_ec);
          }
          receive_next();
        });
  }

  ResponseFrame handle(std::string_view text) {
    CommandFrame cmd;
    try {
      cmd = decode_command(text);
    } catch (const Error&) {
      ++commands;
      return ResponseFrame::error("unknown command");
    }
    std::lock_guard lock(state_mu);
    ++commands;
    const int nth = ++seen[cmd.kind];
    for (const auto& f : cfg.faults)
      if (f.kind == cmd.kind && f.occurrence == nth) return ResponseFrame::error(f.message);
    auto [next, reply] = step_command(state, cmd, cfg.rules);
    state = next;
    return reply;
  }

  void accept_next() {
    frame_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket sock) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) {
        sock.set_option(tcp::no_delay(true), ec);
        std::lock_guard lock(pending_mu);
        pending.push_back(std::move(sock));
      }
      accept_next();
    });
  }

  void publish_loop() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / cfg.fps));
    auto next_tick = std::chrono::steady_clock::now();
    std::uint64_t frame_index = 0;
    for (;;) {
      {
        std::unique_lock lock(run_mu);
        if (run_cv.wait_until(lock, next_tick, [this] { return !running; })) return;
      }
      next_tick += period;

      SimDroneState snap;
      {
        std::lock_guard lock(state_mu);
        snap = state;
      }
      if (!snap.streaming) continue;

      auto noise = cfg.noise;
      noise.seed += frame_index++;
      const auto record = encode_frame_record(inject_noise(render_frame(snap, cfg.scene), noise));

      std::lock_guard lock(clients_mu);
      {
        std::lock_guard plock(pending_mu);
        clients.splice(clients.end(), pending);
      }
      for (auto it = clients.begin(); it != clients.end();) {
        boost::system::error_code ec;
        asio::write(*it, asio::buffer(record), ec);
        if (ec) {
          it = clients.erase(it);
        } else {
          ++it;
        }
      }
      ++published;
    }
  }

  void stop() {
    {
      std::lock_guard lock(run_mu);
      if (!running) return;
      running = false;
    }
    run_cv.notify_all();
    if (publisher.joinable()) publisher.join();
    io.stop();
    if (io_thread.joinable()) io_thread.join();
    boost::system::error_code close_ec;
    command_socket.close(close_ec);
    frame_acceptor.close(close_ec);
    std::scoped_lock lock(clients_mu, pending_mu);
    clients.splice(clients.end(), pending);
    for (auto& c : clients) {
      boost::system::error_code ec;
      c.shutdown(tcp::socket::shutdown_both, ec);
      c.close(ec);
    }
    clients.clear();
  }
};

SimServer::SimServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

SimServer::~SimServer() { stop(); }

void SimServer::stop() { impl_->stop(); }

std::uint16_t SimServer::command_port() const { return impl_->cmd_port; }
std::uint16_t SimServer::frame_port() const { return impl_->frm_port; }

SimDroneState SimServer::state() const {
  std::lock_guard lock(impl_->state_mu);
  return impl_->state;
}

std::uint64_t SimServer::frames_published() const { return impl_->published; }
std::uint64_t SimServer::commands_handled() const { return impl_->commands; }

std::unique_ptr<SimServer> serve_endpoint(const SimConfig& cfg) {
  auto impl = std::make_unique<SimServer::Impl>(cfg);
  auto server = std::unique_ptr<SimServer>(new SimServer(std::move(impl)));
  server->impl_->start();
  return server;
}

}  // namespace gcs
