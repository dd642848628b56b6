#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>

#include "tpik/selection.hpp"
#include "tpik/wire.hpp"

namespace tpik {

using LogSink = std::function<void(std::string_view line)>;

struct ReceiverStats {
  std::uint64_t received = 0;
  std::uint64_t malformed = 0;
  std::uint64_t dropped = 0;  ///< parsed but the inbox was full
};

/// Datagram endpoint of the controller: parses each datagram and queues it in
/// the inbox. Malformed datagrams are logged, counted and dropped.
class UdpReceiver {
 public:
  UdpReceiver(boost::asio::io_context& io, const std::string& host, unsigned short port,
              CommandInbox& inbox, LogSink log = {});
  ~UdpReceiver();
  UdpReceiver(const UdpReceiver&) = delete;
  UdpReceiver& operator=(const UdpReceiver&) = delete;

  unsigned short port() const;
  ReceiverStats stats() const;
  void close();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Blocking datagram sender toward the controller.
class UdpSender {
 public:
  UdpSender(const std::string& host, unsigned short port);
  ~UdpSender();
  /// Throws ContractViolation for messages that render above kMaxDatagramBytes.
  void send(const WireMessage& message);
  /// Raw bytes, no validation.
  void send_raw(std::string_view bytes);

 private:
  boost::asio::io_context io_;
  boost::asio::ip::udp::socket socket_;
  boost::asio::ip::udp::endpoint target_;
};

/// WebSocket endpoint: broadcasts status events to every subscriber and
/// passes each text frame received to the input handler, replying with its
/// result. A subscriber whose outgoing queue exceeds `queue_limit` frames is
/// disconnected.
class StatusServer {
 public:
  using InputHandler = std::function<std::string(std::string_view text)>;
  using GreetingHandler = std::function<std::string()>;

  StatusServer(boost::asio::io_context& io, const std::string& host, unsigned short port,
               InputHandler on_input, GreetingHandler greeting, std::size_t queue_limit = 256,
               LogSink log = {});
  ~StatusServer();
  StatusServer(const StatusServer&) = delete;
  StatusServer& operator=(const StatusServer&) = delete;

  unsigned short port() const;
  /// Thread-safe; delivery happens on the io thread, in call order.
  void broadcast(std::string text);
  std::size_t subscribers() const;
  std::uint64_t overflow_disconnects() const;
  void close();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

struct GatewayOptions {
  std::string host = "127.0.0.1";
  unsigned short udp_port = 0;     ///< 0 picks a free port
  unsigned short status_port = 0;  ///< 0 picks a free port
  /// Where console selections are sent; defaults to the gateway's own datagram port.
  std::string controller_host;
  unsigned short controller_port = 0;
  std::vector<std::string> objects;
  std::size_t subscriber_queue_limit = 256;
  LogSink log;
};

/// Datagram receiver, status channel and the operator selection state
/// machine, served from one background io thread.
class Gateway {
 public:
  Gateway(CommandInbox& inbox, GatewayOptions options);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  unsigned short udp_port() const;
  unsigned short status_port() const;
  ReceiverStats receiver_stats() const;
  void publish(std::string event);
  SelectionState selection() const;
  void stop();

 private:
  std::string handle_input(std::string_view text);

  GatewayOptions options_;
  boost::asio::io_context io_;
  std::unique_ptr<UdpReceiver> receiver_;
  std::unique_ptr<StatusServer> status_;
  std::unique_ptr<UdpSender> sender_;
  mutable std::mutex selection_mutex_;
  SelectionState selection_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
};

}  // namespace tpik
