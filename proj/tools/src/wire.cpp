#include "adversim/wire.hpp"

#include <algorithm>
#include <cmath>

namespace adversim {

using nlohmann::json;

namespace {

double finite_number(const json& j, const char* key) {
  if (!j.contains(key)) throw WireError(std::string("control message needs '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw WireError(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw WireError(std::string("'") + key + "' must be finite");
  return d;
}

void only_keys(const json& j, std::initializer_list<const char*> keys) {
  for (const auto& [k, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* allowed) { return k == allowed; })) {
      throw WireError("unexpected field '" + k + "'");
    }
  }
}

}  // namespace

WireCommand parse_wire_command(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    throw WireError("message is not valid JSON");
  }
  if (!j.is_object()) throw WireError("message must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) {
    throw WireError("message needs a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "control") {
    only_keys(j, {"type", "a", "steer"});
    return ControlCommand{finite_number(j, "a"), finite_number(j, "steer")};
  }
  if (type == "reset") {
    only_keys(j, {"type"});
    return ResetCommand{};
  }
  if (type == "stop") {
    only_keys(j, {"type"});
    return StopCommand{};
  }
  throw WireError("unknown message type '" + type + "'");
}

ControlCommand clamp_command(const ControlCommand& cmd, const ActionBounds& box,
                             const BicycleParams& bicycle) {
  return {std::clamp(cmd.a, box.ax_min, box.ax_max),
          std::clamp(cmd.steer, -bicycle.steer_max, bicycle.steer_max)};
}

json wire_snapshot(const Engine& engine) {
  const EngineConfig& c = engine.config();
  const RunLog& log = engine.log();
  const Snapshot& s = log.entries.empty() ? engine.snapshot() : log.entries.back().snapshot;
  const LogEntry* last = log.entries.empty() ? nullptr : &log.entries.back();

  json j = json::object();
  j["t"] = s.t;
  json veh = json::array();
  for (std::size_t i = 0; i <= s.povs.size(); ++i) {
    const VehicleState& v = i == 0 ? s.sv : s.povs[i - 1];
    json o = json::object();
    o["id"] = i == 0 ? c.sv.id : c.povs[i - 1].id;
    o["role"] = i == 0 ? "sv" : "pov";
    o["x"] = v.x;
    o["y"] = v.y;
    o["v"] = v.v;
    o["phi"] = v.phi;
    if (i > 0 && last && i - 1 < last->modes.size()) {
      o["mode"] = last->modes[i - 1];
      const auto& ts = last->t_star[i - 1];
      o["t_star"] = ts ? json(*ts) : json(nullptr);
    }
    veh.push_back(o);
  }
  j["vehicles"] = veh;
  j["capture_diameter"] = c.sim.capture_diameter;
  j["termination"] = log.termination ? json(log.termination->name()) : json(nullptr);
  return j;
}

json wire_error(const std::string& detail) {
  return json{{"type", "error"}, {"detail", detail}};
}

}  // namespace adversim
