#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "adversim/engine.hpp"

namespace adversim {

struct ControlCommand {
  double a = 0.0;
  double steer = 0.0;

  bool operator==(const ControlCommand&) const = default;
};
struct ResetCommand {
  bool operator==(const ResetCommand&) const = default;
};
struct StopCommand {
  bool operator==(const StopCommand&) const = default;
};

using WireCommand = std::variant<ControlCommand, ResetCommand, StopCommand>;

class WireError : public Error {
 public:
  using Error::Error;
};

/// Parses one client text frame. Throws WireError with a readable detail.
WireCommand parse_wire_command(const std::string& text);

/// Clamps a control to the SV acceleration bounds and +-steer_max.
ControlCommand clamp_command(const ControlCommand& cmd, const ActionBounds& box,
                             const BicycleParams& bicycle);

/// Snapshot message for the latest log entry of `engine`.
nlohmann::json wire_snapshot(const Engine& engine);

nlohmann::json wire_error(const std::string& detail);

}  // namespace adversim
