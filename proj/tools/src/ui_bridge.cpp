#include "adversim/ui_bridge.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <spdlog/spdlog.h>

namespace adversim {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

// Maps a request target onto a file below root, or nothing for paths that
// escape it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root,
                                                    std::string target) {
  if (root.empty()) return std::nullopt;
  if (const auto q = target.find_first_of("?#"); q != std::string::npos) target.resize(q);
  if (target.empty() || target.front() != '/') return std::nullopt;
  if (target.back() == '/') target += "index.html";
  const std::filesystem::path rel = std::filesystem::path(target.substr(1)).lexically_normal();
  if (rel.empty() || rel.is_absolute() || *rel.begin() == "..") return std::nullopt;
  return root / rel;
}

}  // namespace

class WsSession;

namespace detail {

struct BridgeState : std::enable_shared_from_this<BridgeState> {
  explicit BridgeState(BridgeOptions o) : options(std::move(o)), acceptor(ioc) {}

  void add(const std::shared_ptr<WsSession>& s);
  void remove(const WsSession* s);
  void on_message(const std::shared_ptr<WsSession>& s, const std::string& text);
  void do_accept();

  BridgeOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  // Touched only on the network thread.
  std::vector<std::shared_ptr<WsSession>> sessions;
  std::atomic<std::size_t> clients{0};
  std::atomic<std::uint64_t> dropped{0};
  std::mutex cmd_mu;
  std::deque<WireCommand> commands;
  std::atomic<bool> stopped{false};
};

}  // namespace detail

using detail::BridgeState;

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<BridgeState> owner)
      : ws_(std::move(socket)), owner_(std::move(owner)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        spdlog::debug("websocket handshake failed: {}", ec.message());
        return;
      }
      self->owner_->add(self);
      self->do_read();
    });
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (closed_) return;
    if (queue_.size() >= owner_->options.backlog) {
      spdlog::warn("dropping slow websocket client after {} queued messages", queue_.size());
      ++owner_->dropped;
      close();
      return;
    }
    queue_.push_back(std::move(msg));
    if (!writing_) do_write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    owner_->remove(this);
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).close();
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (ec != websocket::error::closed) spdlog::debug("websocket read ended: {}", ec.message());
        self->close();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->owner_->on_message(self, text);
      self->do_read();
    });
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->close();
                        return;
                      }
                      self->queue_.pop_front();
                      if (self->queue_.empty() || self->closed_) {
                        self->writing_ = false;
                      } else {
                        self->do_write();
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<BridgeState> owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::shared_ptr<BridgeState> owner)
      : stream_(std::move(socket)), owner_(std::move(owner)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->on_request();
                     });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), owner_)->run(std::move(req_));
        return;
      }
      reply(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      reply(http::status::method_not_allowed, "text/plain", "method not allowed\n");
      return;
    }
    const auto path = resolve_static(owner_->options.static_dir, std::string(req_.target()));
    std::ifstream in;
    if (path && std::filesystem::is_regular_file(*path)) in.open(*path, std::ios::binary);
    if (!in.is_open()) {
      reply(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    reply(http::status::ok, mime_type(*path), body.str());
  }

  void reply(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "adversim");
    res->set(http::field::content_type, type);
    res->keep_alive(false);
    const bool head = req_.method() == http::verb::head;
    res->body() = head ? std::string() : std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code, std::size_t) {
                        beast::error_code ec;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                      });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<BridgeState> owner_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void BridgeState::add(const std::shared_ptr<WsSession>& s) {
  sessions.push_back(s);
  clients.store(sessions.size());
  spdlog::info("websocket client connected ({} total)", sessions.size());
}

void BridgeState::remove(const WsSession* s) {
  std::erase_if(sessions, [&](const auto& p) { return p.get() == s; });
  clients.store(sessions.size());
}

void BridgeState::on_message(const std::shared_ptr<WsSession>& s, const std::string& text) {
  auto reply = [&](const std::string& detail) {
    s->send(std::make_shared<const std::string>(wire_error(detail).dump()));
  };
  WireCommand cmd;
  try {
    cmd = parse_wire_command(text);
  } catch (const WireError& e) {
    reply(e.what());
    return;
  }
  if (sessions.empty() || sessions.front() != s) {
    reply("read-only client: only the first connected client may send commands");
    return;
  }
  std::lock_guard lock(cmd_mu);
  if (commands.size() >= options.command_capacity) commands.pop_front();
  commands.push_back(cmd);
}

void BridgeState::do_accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(socket), self)->run();
    self->do_accept();
  });
}

UiBridge::UiBridge(BridgeOptions options) : impl_(std::make_shared<BridgeState>(std::move(options))) {
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->options.address, ec);
  if (ec) throw BindError("invalid address '" + impl_->options.address + "'");
  const tcp::endpoint ep(address, impl_->options.port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw BindError("cannot listen on " + impl_->options.address + ":" +
                    std::to_string(impl_->options.port) + ": " + ec.message());
  }
  impl_->do_accept();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

UiBridge::~UiBridge() { shutdown(); }

unsigned short UiBridge::port() const { return impl_->acceptor.local_endpoint().port(); }

void UiBridge::broadcast(const std::string& text) {
  if (impl_->stopped.load()) return;
  asio::post(impl_->ioc, [impl = impl_, msg = std::make_shared<const std::string>(text)] {
    const auto sessions = impl->sessions;
    for (const auto& s : sessions) s->send(msg);
  });
}

std::vector<WireCommand> UiBridge::drain_commands() {
  std::lock_guard lock(impl_->cmd_mu);
  std::vector<WireCommand> out(impl_->commands.begin(), impl_->commands.end());
  impl_->commands.clear();
  return out;
}

std::size_t UiBridge::client_count() const { return impl_->clients.load(); }

std::uint64_t UiBridge::dropped_clients() const { return impl_->dropped.load(); }

void UiBridge::shutdown() {
  if (impl_->stopped.exchange(true)) return;
  asio::post(impl_->ioc, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    const auto sessions = impl->sessions;
    for (const auto& s : sessions) s->close();
    impl->ioc.stop();
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace adversim
