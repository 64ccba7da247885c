#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "adversim/wire.hpp"

namespace adversim {

namespace detail {
struct BridgeState;
}

class BindError : public Error {
 public:
  using Error::Error;
};

struct BridgeOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port; see UiBridge::port().
  unsigned short port = 0;
  /// Served under `/`; index.html answers the bare root.
  std::filesystem::path static_dir;
  /// Clients with this many unsent snapshots are disconnected.
  std::size_t backlog = 32;
  std::size_t command_capacity = 256;
};

/// Websocket session layer. Runs its own network thread; broadcast() and
/// drain_commands() never block on a client.
///
/// The first connected client drives the SV. Later clients only observe and
/// get an error reply for any command they send. The driver role passes to
/// the oldest remaining client when the driver leaves.
class UiBridge {
 public:
  /// Binds and starts listening. Throws BindError when the port is taken.
  explicit UiBridge(BridgeOptions options);
  ~UiBridge();
  UiBridge(const UiBridge&) = delete;
  UiBridge& operator=(const UiBridge&) = delete;

  unsigned short port() const;
  void broadcast(const std::string& text);
  /// Valid commands from the driving client in arrival order.
  std::vector<WireCommand> drain_commands();
  std::size_t client_count() const;
  /// Clients disconnected for exceeding the backlog.
  std::uint64_t dropped_clients() const;
  void shutdown();

 private:
  std::shared_ptr<detail::BridgeState> impl_;
};

}  // namespace adversim
