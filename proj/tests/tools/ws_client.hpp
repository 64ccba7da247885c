#pragma once

#include <sys/socket.h>
#include <sys/time.h>

#include <optional>
#include <string>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace adversim::testing {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

inline void set_receive_timeout(tcp::socket& s, int millis) {
  timeval tv{};
  tv.tv_sec = millis / 1000;
  tv.tv_usec = (millis % 1000) * 1000;
  ::setsockopt(s.native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

/// Blocking websocket client with a receive timeout.
class WsClient {
 public:
  explicit WsClient(unsigned short port, int timeout_ms = 3000) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    set_receive_timeout(ws_.next_layer(), timeout_ms);
    ws_.handshake("127.0.0.1:" + std::to_string(port), "/ws");
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }

  /// Next text frame, or nothing on timeout or close.
  std::optional<std::string> receive() {
    beast::flat_buffer buf;
    beast::error_code ec;
    ws_.read(buf, ec);
    if (ec) return std::nullopt;
    return beast::buffers_to_string(buf.data());
  }

  void close() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

inline HttpReply http_get(unsigned short port, const std::string& target) {
  asio::io_context ioc;
  tcp::socket sock(ioc);
  tcp::resolver resolver(ioc);
  asio::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
  set_receive_timeout(sock, 3000);
  http::request<http::empty_body> req(http::verb::get, target, 11);
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  return {static_cast<int>(res.result_int()), res.body()};
}

/// A port that was free a moment ago.
inline unsigned short free_port() {
  asio::io_context ioc;
  tcp::acceptor a(ioc, tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0));
  return a.local_endpoint().port();
}

}  // namespace adversim::testing
