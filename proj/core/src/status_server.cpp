#include <deque>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "tpik/gateway.hpp"

namespace tpik {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using asio::ip::tcp;

namespace {

class Session;

}  // namespace

struct StatusServer::Impl : std::enable_shared_from_this<Impl> {
  Impl(asio::io_context& io, const tcp::endpoint& at, InputHandler input, GreetingHandler hello,
       std::size_t limit, LogSink sink)
      : io(io),
        acceptor(io, at),
        on_input(std::move(input)),
        greeting(std::move(hello)),
        queue_limit(limit),
        log(std::move(sink)),
        bound_port(acceptor.local_endpoint().port()) {}

  void accept();
  void join(const std::shared_ptr<Session>& s);
  void leave(Session* s);

  asio::io_context& io;
  tcp::acceptor acceptor;
  InputHandler on_input;
  GreetingHandler greeting;
  std::size_t queue_limit;
  LogSink log;
  unsigned short bound_port;
  std::set<std::shared_ptr<Session>> sessions;
  std::atomic<std::size_t> count{0};
  std::atomic<std::uint64_t> overflows{0};
  bool closed = false;
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, std::shared_ptr<StatusServer::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (closing_) return;
    if (queue_.size() >= server_->queue_limit) {
      overflow();
      return;
    }
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void shutdown() {
    closing_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    server_->join(shared_from_this());
    if (server_->greeting) send(std::make_shared<const std::string>(server_->greeting()));
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      leave();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (server_->on_input) send(std::make_shared<const std::string>(server_->on_input(text)));
    read();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      leave();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty() && !closing_) write();
  }

  void overflow() {
    server_->overflows.fetch_add(1);
    if (server_->log) server_->log("disconnect slow status subscriber: queue overflow");
    shutdown();
    leave();
  }

  void leave() {
    if (left_) return;
    left_ = true;
    closing_ = true;
    server_->leave(this);
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<StatusServer::Impl> server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closing_ = false;
  bool left_ = false;
};

}  // namespace

void StatusServer::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec || self->closed) return;
    std::make_shared<Session>(std::move(socket), self)->run();
    self->accept();
  });
}

void StatusServer::Impl::join(const std::shared_ptr<Session>& s) {
  if (closed) {
    s->shutdown();
    return;
  }
  sessions.insert(s);
  count.store(sessions.size());
}

void StatusServer::Impl::leave(Session* s) {
  for (auto it = sessions.begin(); it != sessions.end(); ++it) {
    if (it->get() == s) {
      sessions.erase(it);
      break;
    }
  }
  count.store(sessions.size());
}

StatusServer::StatusServer(asio::io_context& io, const std::string& host, unsigned short port,
                           InputHandler on_input, GreetingHandler greeting, std::size_t queue_limit,
                           LogSink log)
    : impl_(std::make_shared<Impl>(io, tcp::endpoint(asio::ip::make_address(host), port),
                                   std::move(on_input), std::move(greeting),
                                   std::max<std::size_t>(queue_limit, 1), std::move(log))) {
  impl_->accept();
}

StatusServer::~StatusServer() { close(); }

unsigned short StatusServer::port() const { return impl_->bound_port; }

void StatusServer::broadcast(std::string text) {
  auto shared = std::make_shared<const std::string>(std::move(text));
  asio::post(impl_->io, [impl = impl_, shared] {
    // Copy first: an overflowing session removes itself while we iterate.
    const std::vector<std::shared_ptr<Session>> targets(impl->sessions.begin(), impl->sessions.end());
    for (const auto& s : targets) s->send(shared);
  });
}

std::size_t StatusServer::subscribers() const { return impl_->count.load(); }
std::uint64_t StatusServer::overflow_disconnects() const { return impl_->overflows.load(); }

void StatusServer::close() {
  asio::post(impl_->io, [impl = impl_] {
    if (impl->closed) return;
    impl->closed = true;
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    const std::vector<std::shared_ptr<Session>> all(impl->sessions.begin(), impl->sessions.end());
    for (const auto& s : all) s->shutdown();
    impl->sessions.clear();
    impl->count.store(0);
  });
}

}  // namespace tpik
