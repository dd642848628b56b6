#include "tpik/gateway.hpp"

#include <array>

#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/ip/address.hpp>
#include <boost/asio/post.hpp>
#include <nlohmann/json.hpp>

#include "tpik/errors.hpp"
#include "tpik/status.hpp"

namespace tpik {

namespace asio = boost::asio;
using asio::ip::udp;

namespace {

std::string printable(std::string_view bytes, std::size_t limit = 80) {
  std::string out;
  for (char c : bytes.substr(0, limit)) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x20 && u < 0x7f) {
      out += c;
    } else {
      static constexpr char hex[] = "0123456789abcdef";
      out += "\\x";
      out += hex[u >> 4];
      out += hex[u & 0xf];
    }
  }
  if (bytes.size() > limit) out += "...";
  return out;
}

std::string trimmed(const WireMessage& m) {
  std::string line = render(m);
  line.pop_back();
  return line;
}

}  // namespace

// UdpReceiver -----------------------------------------------------------------

struct UdpReceiver::Impl : std::enable_shared_from_this<Impl> {
  Impl(asio::io_context& io, const udp::endpoint& at, CommandInbox& in, LogSink sink)
      : socket(io, at), inbox(in), log(std::move(sink)), bound_port(socket.local_endpoint().port()) {}

  void receive() {
    socket.async_receive_from(asio::buffer(buffer), from,
                              [self = shared_from_this()](const boost::system::error_code& ec,
                                                          std::size_t n) { self->on_receive(ec, n); });
  }

  void on_receive(const boost::system::error_code& ec, std::size_t n) {
    if (ec == asio::error::operation_aborted || !socket.is_open()) return;
    if (!ec) handle(std::string_view(buffer.data(), n));
    receive();
  }

  void handle(std::string_view datagram) {
    received.fetch_add(1);
    std::string error;
    std::optional<WireMessage> msg;
    if (datagram.size() > kMaxDatagramBytes) {
      error = "datagram exceeds " + std::to_string(kMaxDatagramBytes) + " bytes";
    } else {
      msg = parse_message(datagram, &error);
    }
    if (!msg) {
      malformed.fetch_add(1);
      if (log) log("drop malformed datagram \"" + printable(datagram) + "\": " + error);
      return;
    }
    if (!inbox.push(*msg)) {
      dropped.fetch_add(1);
      if (log) log("drop " + trimmed(*msg) + ": inbox full");
      return;
    }
    if (log) log("recv " + trimmed(*msg));
  }

  udp::socket socket;
  CommandInbox& inbox;
  LogSink log;
  unsigned short bound_port;
  std::array<char, 65536> buffer{};
  udp::endpoint from;
  std::atomic<std::uint64_t> received{0};
  std::atomic<std::uint64_t> malformed{0};
  std::atomic<std::uint64_t> dropped{0};
};

UdpReceiver::UdpReceiver(asio::io_context& io, const std::string& host, unsigned short port,
                         CommandInbox& inbox, LogSink log)
    : impl_(std::make_shared<Impl>(io, udp::endpoint(asio::ip::make_address(host), port), inbox,
                                   std::move(log))) {
  impl_->receive();
}

UdpReceiver::~UdpReceiver() { close(); }

unsigned short UdpReceiver::port() const { return impl_->bound_port; }

ReceiverStats UdpReceiver::stats() const {
  return {impl_->received.load(), impl_->malformed.load(), impl_->dropped.load()};
}

void UdpReceiver::close() {
  asio::post(impl_->socket.get_executor(), [impl = impl_] {
    boost::system::error_code ignored;
    impl->socket.close(ignored);
  });
}

// UdpSender -------------------------------------------------------------------

UdpSender::UdpSender(const std::string& host, unsigned short port)
    : socket_(io_), target_(asio::ip::make_address(host), port) {
  socket_.open(target_.protocol());
}

UdpSender::~UdpSender() {
  boost::system::error_code ignored;
  socket_.close(ignored);
}

void UdpSender::send(const WireMessage& message) {
  const std::string bytes = render(message);
  if (bytes.size() > kMaxDatagramBytes) {
    throw ContractViolation("rendered message exceeds " + std::to_string(kMaxDatagramBytes) + " bytes");
  }
  send_raw(bytes);
}

void UdpSender::send_raw(std::string_view bytes) {
  socket_.send_to(asio::buffer(bytes.data(), bytes.size()), target_);
}

// Gateway ---------------------------------------------------------------------

Gateway::Gateway(CommandInbox& inbox, GatewayOptions options) : options_(std::move(options)) {
  receiver_ = std::make_unique<UdpReceiver>(io_, options_.host, options_.udp_port, inbox, options_.log);
  status_ = std::make_unique<StatusServer>(
      io_, options_.host, options_.status_port,
      [this](std::string_view text) { return handle_input(text); },
      [this] { return hello_json(selection(), options_.objects); },
      options_.subscriber_queue_limit, options_.log);
  const std::string host =
      options_.controller_host.empty() ? options_.host : options_.controller_host;
  const unsigned short port =
      options_.controller_port == 0 ? receiver_->port() : options_.controller_port;
  sender_ = std::make_unique<UdpSender>(host, port);
  thread_ = std::thread([this] {
    auto guard = asio::make_work_guard(io_);
    io_.run();
  });
}

Gateway::~Gateway() { stop(); }

void Gateway::stop() {
  if (stopped_.exchange(true)) return;
  receiver_->close();
  status_->close();
  // Runs after the closes above; pending aborted handlers are then discarded.
  asio::post(io_, [this] { io_.stop(); });
  if (thread_.joinable()) thread_.join();
}

unsigned short Gateway::udp_port() const { return receiver_->port(); }
unsigned short Gateway::status_port() const { return status_->port(); }
ReceiverStats Gateway::receiver_stats() const { return receiver_->stats(); }
void Gateway::publish(std::string event) { status_->broadcast(std::move(event)); }

SelectionState Gateway::selection() const {
  std::lock_guard lock(selection_mutex_);
  return selection_;
}

std::string Gateway::handle_input(std::string_view text) {
  const auto input = nlohmann::json::parse(text, nullptr, false);
  if (input.is_discarded() || !input.is_object() || input.value("type", "") != "select" ||
      !input.contains("icon") || !input["icon"].is_string()) {
    if (options_.log) options_.log("reject console input: not a select message");
    SelectionResult bad{selection(), std::nullopt,
                        std::string("expected {\"type\":\"select\",\"icon\":<id>}")};
    return selection_json(bad, options_.objects);
  }
  const std::string icon = input["icon"].get<std::string>();
  SelectionResult result;
  {
    std::lock_guard lock(selection_mutex_);
    result = select(selection_, icon, options_.objects);
    selection_ = result.state;
  }
  if (result.error) {
    if (options_.log) options_.log("reject icon '" + icon + "': " + *result.error);
  } else if (result.message) {
    if (options_.log) options_.log("input " + icon + " -> send " + trimmed(*result.message));
    sender_->send(*result.message);
  } else if (options_.log) {
    options_.log("input " + icon + " -> " + std::string(to_string(result.state.layer)));
  }
  return selection_json(result, options_.objects);
}

}  // namespace tpik
