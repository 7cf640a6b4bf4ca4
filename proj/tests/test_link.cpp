#include <atomic>
#include <thread>

#include "doctest.h"
#include "gcs/error.hpp"
#include "gcs/link.hpp"
#include "gcs/sim_server.hpp"
#include "test_support.hpp"

using namespace gcs;
using namespace std::chrono_literals;
using K = CommandKind;
namespace asio = boost::asio;
using asio::ip::udp;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected gcs::Error");
  return Errc::BadParams;
}

// Minimal scripted drone: answers "ok" to everything, "87" to battery?, and
// stays silent for "takeoff".
class SilentOnTakeoff {
 public:
  SilentOnTakeoff() : socket_(io_, {asio::ip::address_v4::loopback(), 0}) {
    socket_.non_blocking(true);
    thread_ = std::thread([this] {
      std::array<char, 512> buf;
      while (!stop_) {
        udp::endpoint from;
        boost::system::error_code ec;
        auto n = socket_.receive_from(asio::buffer(buf), from, 0, ec);
        if (ec) {
          std::this_thread::sleep_for(1ms);
          continue;
        }
        std::string msg(buf.data(), n);
        if (msg == "takeoff") continue;
        std::string reply = msg == "battery?" ? "87" : "ok";
        socket_.send_to(asio::buffer(reply), from, 0, ec);
      }
    });
  }
  ~SilentOnTakeoff() {
    stop_ = true;
    thread_.join();
  }
  std::uint16_t port() const { return socket_.local_endpoint().port(); }

 private:
  asio::io_context io_;
  udp::socket socket_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace

TEST_CASE("open_session against the simulator") {
  auto sim = serve_endpoint(testing_support::loopback_sim());
  auto ep = testing_support::endpoint_for(*sim);
  auto s = open_session(ep);
  CHECK(s.sdk_mode());
  CHECK(sim->state().sdk_mode);

  // entering SDK mode is idempotent
  auto s2 = open_session(ep);
  CHECK(s2.sdk_mode());
  CHECK(is_serialized(s.events()));
  sim->stop();
  CHECK(sim->state().sdk_mode);
}

TEST_CASE("open_session without a drone times out after all retries") {
  LinkEndpoint ep;
  ep.drone_addr = {"127.0.0.1", testing_support::free_udp_port()};
  ep.local_bind = {"127.0.0.1", 0};
  ep.reply_timeout = 100ms;
  ep.max_retries = 3;
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(code_of([&] { open_session(ep); }) == Errc::ConnectTimeout);
  CHECK(std::chrono::steady_clock::now() - t0 >= 300ms);
}

TEST_CASE("endpoint validation and bind failure") {
  LinkEndpoint ep;
  ep.drone_addr = {"127.0.0.1", 0};
  CHECK(code_of([&] { open_session(ep); }) == Errc::BadEndpoint);
  ep.drone_addr = {"127.0.0.1", 8889};
  ep.reply_timeout = 0ms;
  CHECK(code_of([&] { open_session(ep); }) == Errc::BadEndpoint);
  ep.reply_timeout = 100ms;
  ep.local_bind = {"10.255.255.1", 0};  // not a local interface
  CHECK(code_of([&] { open_session(ep); }) == Errc::BindFailure);

  CHECK(NetAddress::parse("192.168.10.1:8889") == NetAddress{"192.168.10.1", 8889});
  CHECK_THROWS_AS(NetAddress::parse("nohost"), Error);
  CHECK_THROWS_AS(NetAddress::parse("1.2.3.4:70000"), Error);
}

TEST_CASE("send_command contracts") {
  auto sim = serve_endpoint(testing_support::loopback_sim());
  auto s = open_session(testing_support::endpoint_for(*sim));

  CHECK(code_of([&] { send_command(s, CommandFrame::of(K::Forward, 100)); }) == Errc::DroneError);
  const auto before = s.events().size();
  CHECK(code_of([&] { send_command(s, CommandFrame::of(K::Forward, 10)); }) == Errc::InvalidMagnitude);
  CHECK(s.events().size() == before);  // nothing sent

  CHECK(send_command(s, CommandFrame::of(K::Takeoff)).is_ok());
  CHECK(send_command(s, CommandFrame::of(K::QueryBattery)) == ResponseFrame::of_value(99));
  CHECK(sim->state().phase == FlightPhase::Flying);
  CHECK(s.last_seq() == 4);  // command, forward, takeoff, battery?
  CHECK(is_serialized(s.events()));

  sim->stop();
  CHECK(sim->state().phase == FlightPhase::Flying);  // no auto-land
}

TEST_CASE("every wire word gets a parseable reply over loopback") {
  auto sim = serve_endpoint(testing_support::loopback_sim());
  auto s = open_session(testing_support::endpoint_for(*sim));
  for (auto kind : kAllCommandKinds) {
    CommandFrame cmd = is_translation(kind) ? CommandFrame::of(kind, 50)
                       : is_rotation(kind)  ? CommandFrame::of(kind, 90)
                                            : CommandFrame::of(kind);
    try {
      send_command(s, cmd);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DroneError);  // e.g. land while grounded
    }
  }
  const auto events = s.events();
  CHECK(is_serialized(events));
  for (const auto& e : events) {
    CHECK(e.direction != LinkDirection::Timeout);
    if (e.direction == LinkDirection::Inbound) CHECK_NOTHROW(parse_response(e.bytes));
  }
}

TEST_CASE("reply timeout leaves the session usable") {
  SilentOnTakeoff drone;
  LinkEndpoint ep;
  ep.drone_addr = {"127.0.0.1", drone.port()};
  ep.local_bind = {"127.0.0.1", 0};
  ep.reply_timeout = 150ms;
  auto s = open_session(ep);
  CHECK(code_of([&] { send_command(s, CommandFrame::of(K::Takeoff)); }) == Errc::ReplyTimeout);
  CHECK(send_command(s, CommandFrame::of(K::QueryBattery)) == ResponseFrame::of_value(87));
  const auto ev = s.events();
  CHECK(is_serialized(ev));
  CHECK(std::count_if(ev.begin(), ev.end(),
                      [](const LinkEvent& e) { return e.direction == LinkDirection::Timeout; }) == 1);
}

TEST_CASE("simulator answers concurrent clients in arrival order") {
  auto sim = serve_endpoint(testing_support::loopback_sim());
  asio::io_context io;
  const udp::endpoint drone(asio::ip::address_v4::loopback(), sim->command_port());
  udp::socket a(io, {asio::ip::address_v4::loopback(), 0});
  udp::socket b(io, {asio::ip::address_v4::loopback(), 0});

  auto recv = [](udp::socket& s) {
    std::array<char, 256> buf;
    udp::endpoint from;
    auto n = s.receive_from(asio::buffer(buf), from);
    return std::string(buf.data(), n);
  };
  a.send_to(asio::buffer(std::string("command")), drone);
  CHECK(recv(a) == "ok");
  a.send_to(asio::buffer(std::string("takeoff")), drone);
  b.send_to(asio::buffer(std::string("land")), drone);
  CHECK(recv(a) == "ok");
  CHECK(recv(b) == "ok");  // land only succeeds if takeoff ran first
  auto st = sim->state();
  CHECK(st.phase == FlightPhase::Grounded);
  CHECK(st.battery == 98);
  CHECK(sim->commands_handled() == 3);
}

TEST_CASE("fault injection replies with an error") {
  auto cfg = testing_support::loopback_sim();
  cfg.faults.push_back({K::Forward, 2, "injected"});
  auto sim = serve_endpoint(cfg);
  auto s = open_session(testing_support::endpoint_for(*sim));
  send_command(s, CommandFrame::of(K::Takeoff));
  CHECK(send_command(s, CommandFrame::of(K::Forward, 50)).is_ok());
  CHECK(code_of([&] { send_command(s, CommandFrame::of(K::Forward, 50)); }) == Errc::DroneError);
  CHECK(sim->state().y == 50);
}
