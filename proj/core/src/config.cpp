#include "adversim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace adversim {

using nlohmann::json;

MpcOptions AnchorParams::mpc_options() const {
  MpcOptions o;
  o.accel_weight = accel_weight;
  o.steer_weight = steer_weight;
  o.steer_rate_weight = steer_rate_weight;
  return o;
}

std::string to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::Adversarial: return "adversarial";
    case PlannerKind::Predictive: return "predictive";
    case PlannerKind::LaneKeep: return "lane_keep";
  }
  return "adversarial";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  check_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

void read(const json& obj, const char* key, const std::string& path, double& out) {
  if (obj.contains(key)) out = get_number(obj.at(key), path + "." + key);
}

void read(const json& obj, const char* key, const std::string& path, int& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  out = v.get<int>();
}

void read(const json& obj, const char* key, const std::string& path, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(path + "." + key, "expected a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

void read(const json& obj, const char* key, const std::string& path, bool& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  out = v.get<bool>();
}

void read(const json& obj, const char* key, const std::string& path, std::string& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  out = v.get<std::string>();
}

std::vector<double> number_array(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_array() || j.size() != n) {
    fail(path, "expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json box_to_json(const ActionBounds& b) {
  json j = json::object();
  j["ax_min"] = b.ax_min;
  j["ax_max"] = b.ax_max;
  j["ay_min"] = b.ay_min;
  j["ay_max"] = b.ay_max;
  return j;
}

ActionBounds box_from_json(const json& j, const std::string& path, ActionBounds b) {
  check_keys(j, path, {"ax_min", "ax_max", "ay_min", "ay_max"});
  read(j, "ax_min", path, b.ax_min);
  read(j, "ax_max", path, b.ax_max);
  read(j, "ay_min", path, b.ay_min);
  read(j, "ay_max", path, b.ay_max);
  return b;
}

json matrix_to_json(const Eigen::Matrix4d& m) {
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    json r = json::array();
    for (int k = 0; k < 4; ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

// Accepts either four diagonal entries or a full 4x4 row-major matrix.
Eigen::Matrix4d matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  if (j.size() == 4 && j[0].is_number()) {
    const auto d = number_array(j, path, 4);
    for (int i = 0; i < 4; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
  }
  if (j.size() != 4) fail(path, "expected 4 diagonal entries or 4 rows");
  for (int i = 0; i < 4; ++i) {
    const auto r = number_array(j[static_cast<std::size_t>(i)],
                                path + "[" + std::to_string(i) + "]", 4);
    for (int k = 0; k < 4; ++k) m(i, k) = r[static_cast<std::size_t>(k)];
  }
  return m;
}

json state_to_json(const VehicleState& s) { return json::array({s.x, s.y, s.v, s.phi}); }

VehicleState state_from_json(const json& j, const std::string& path) {
  const auto v = number_array(j, path, 4);
  return {v[0], v[1], v[2], v[3]};
}

json dims_to_json(const VehicleDims& d) { return json::array({d.length, d.width}); }

VehicleDims dims_from_json(const json& j, const std::string& path) {
  const auto v = number_array(j, path, 2);
  if (!(v[0] > 0.0) || !(v[1] > 0.0)) fail(path, "dimensions must be positive");
  return {v[0], v[1]};
}

SvPolicyParams preset(const std::string& policy, const std::string& path) {
  if (policy == "conservative" || policy == "idle" || policy == "external") {
    return SvPolicyParams::conservative();
  }
  if (policy == "aggressive") return SvPolicyParams::aggressive();
  fail(path, "unknown policy '" + policy + "'");
}

json sv_params_to_json(const SvPolicyParams& p) {
  json j = json::object();
  j["v0"] = p.idm.v0;
  j["t_headway"] = p.idm.t_headway;
  j["a_max"] = p.idm.a_max;
  j["b_comf"] = p.idm.b_comf;
  j["s0"] = p.idm.s0;
  j["delta_exp"] = p.idm.delta_exp;
  j["lead_gap_min"] = p.lane_change.lead_gap_min;
  j["lag_gap_min"] = p.lane_change.lag_gap_min;
  j["cooldown"] = p.lane_change.cooldown;
  j["pd_kp"] = p.lane_change.pd_kp;
  j["pd_kd"] = p.lane_change.pd_kd;
  j["yaw_rate_max"] = p.lane_change.yaw_rate_max;
  j["min_gain"] = p.lane_change.min_gain;
  j["action_box"] = box_to_json(p.box);
  j["merge_lane"] = p.merge_lane ? json(*p.merge_lane) : json(nullptr);
  return j;
}

void sv_params_from_json(const json& j, const std::string& path, SvPolicyParams& p) {
  check_keys(j, path,
             {"v0", "t_headway", "a_max", "b_comf", "s0", "delta_exp", "lead_gap_min",
              "lag_gap_min", "cooldown", "pd_kp", "pd_kd", "yaw_rate_max", "min_gain",
              "action_box", "merge_lane"});
  read(j, "v0", path, p.idm.v0);
  read(j, "t_headway", path, p.idm.t_headway);
  read(j, "a_max", path, p.idm.a_max);
  read(j, "b_comf", path, p.idm.b_comf);
  read(j, "s0", path, p.idm.s0);
  read(j, "delta_exp", path, p.idm.delta_exp);
  read(j, "lead_gap_min", path, p.lane_change.lead_gap_min);
  read(j, "lag_gap_min", path, p.lane_change.lag_gap_min);
  read(j, "cooldown", path, p.lane_change.cooldown);
  read(j, "pd_kp", path, p.lane_change.pd_kp);
  read(j, "pd_kd", path, p.lane_change.pd_kd);
  read(j, "yaw_rate_max", path, p.lane_change.yaw_rate_max);
  read(j, "min_gain", path, p.lane_change.min_gain);
  if (j.contains("action_box")) p.box = box_from_json(j.at("action_box"), path + ".action_box", p.box);
  if (j.contains("merge_lane")) {
    const json& m = j.at("merge_lane");
    if (m.is_null()) {
      p.merge_lane.reset();
    } else if (m.is_number_integer()) {
      p.merge_lane = m.get<int>();
    } else {
      fail(path + ".merge_lane", "expected an integer or null");
    }
  }
}

PlannerKind planner_from_string(const std::string& s, const std::string& path) {
  if (s == "adversarial") return PlannerKind::Adversarial;
  if (s == "predictive") return PlannerKind::Predictive;
  if (s == "lane_keep") return PlannerKind::LaneKeep;
  fail(path, "unknown planner '" + s + "'");
}

json assignment_to_json(const PovAssignmentSpec& a) {
  json j = json::object();
  if (a.lanes) j["lanes"] = json::array({a.lanes->first, a.lanes->second});
  if (a.y_band) j["y_band"] = json::array({a.y_band->first, a.y_band->second});
  j["no_rear_end"] = a.no_rear_end;
  json ord = json::array();
  for (const auto& o : a.ordering) {
    json oj = json::object();
    oj["other"] = o.other;
    oj["relation"] = o.ahead ? "ahead" : "behind";
    oj["gap"] = o.gap;
    ord.push_back(oj);
  }
  j["ordering"] = ord;
  j["planner"] = to_string(a.planner);
  return j;
}

PovAssignmentSpec assignment_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"lanes", "y_band", "no_rear_end", "ordering", "planner"});
  PovAssignmentSpec a;
  if (j.contains("lanes")) {
    const json& l = j.at("lanes");
    const std::string lp = path + ".lanes";
    if (l.is_number_integer()) {
      a.lanes = std::make_pair(l.get<int>(), l.get<int>());
    } else if (l.is_array() && l.size() == 2 && l[0].is_number_integer() &&
               l[1].is_number_integer()) {
      a.lanes = std::make_pair(l[0].get<int>(), l[1].get<int>());
    } else {
      fail(lp, "expected a lane index or [first, last]");
    }
  }
  if (j.contains("y_band")) {
    const auto b = number_array(j.at("y_band"), path + ".y_band", 2);
    a.y_band = std::make_pair(b[0], b[1]);
  }
  read(j, "no_rear_end", path, a.no_rear_end);
  if (j.contains("ordering")) {
    const json& ord = j.at("ordering");
    if (!ord.is_array()) fail(path + ".ordering", "expected an array");
    for (std::size_t i = 0; i < ord.size(); ++i) {
      const std::string op = path + ".ordering[" + std::to_string(i) + "]";
      check_keys(ord[i], op, {"other", "relation", "gap"});
      Ordering o;
      read(ord[i], "other", op, o.other);
      std::string rel = "ahead";
      read(ord[i], "relation", op, rel);
      if (rel != "ahead" && rel != "behind") fail(op + ".relation", "expected ahead or behind");
      o.ahead = rel == "ahead";
      read(ord[i], "gap", op, o.gap);
      a.ordering.push_back(o);
    }
  }
  std::string planner = to_string(a.planner);
  read(j, "planner", path, planner);
  a.planner = planner_from_string(planner, path + ".planner");
  return a;
}

}  // namespace

std::pair<double, double> pov_center_band(const EngineConfig& c, std::size_t i) {
  const PovConfig& p = c.povs.at(i);
  if (p.assignment.y_band) return *p.assignment.y_band;
  const auto lanes = p.assignment.lanes.value_or(std::make_pair(0, c.road.lane_count - 1));
  const double inset = 0.5 * p.dims.width + c.planner.band_margin;
  return {lanes.first * c.road.lane_width + inset,
          (lanes.second + 1) * c.road.lane_width - inset};
}

std::optional<std::size_t> EngineConfig::pov_index(const std::string& id) const {
  for (std::size_t i = 0; i < povs.size(); ++i) {
    if (povs[i].id == id) return i;
  }
  return std::nullopt;
}

void EngineConfig::validate() const {
  if (!(sim.delta > 0.0)) throw ConfigError("sim.delta must be positive");
  if (!(sim.t_bar > 0.0)) throw ConfigError("sim.t_bar must be positive");
  const double ratio = sim.t_bar / sim.delta;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ConfigError("sim.t_bar must be a multiple of sim.delta");
  }
  if (!(sim.timeout > 0.0)) throw ConfigError("sim.timeout must be positive");
  if (!(sim.capture_diameter > 0.0)) throw ConfigError("sim.capture_diameter must be positive");
  if (road.lane_count < 1) throw ConfigError("road.lane_count must be at least 1");
  if (!(road.lane_width > 0.0)) throw ConfigError("road.lane_width must be positive");
  const ActionBounds& b = constraints.box;
  if (!(b.ax_min < 0.0 && 0.0 < b.ax_max && b.ay_min < 0.0 && 0.0 < b.ay_max)) {
    throw ConfigError("constraints.action_box must contain the origin in its interior");
  }
  if (!(constraints.v_range.min >= 0.0 && constraints.v_range.min < constraints.v_range.max)) {
    throw ConfigError("constraints.v_range needs 0 <= min < max");
  }
  if (!(constraints.phi_max > 0.0)) throw ConfigError("constraints.phi_max must be positive");
  try {
    planner.weights.validate();
    anchor.bicycle.validate();
    SvPolicyParams sp = sv.params;
    sp.road = road;
    sp.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!(planner.minimax_tol > 0.0)) throw ConfigError("planner.minimax_tol must be positive");
  if (planner.max_sweeps < 1) throw ConfigError("planner.max_sweeps must be at least 1");
  if (planner.band_margin < 0.0) throw ConfigError("planner.band_margin must be non-negative");
  if (planner.rear_gap < 0.0) throw ConfigError("planner.rear_gap must be non-negative");
  if (!(anchor.accel_weight >= 0.0 && anchor.steer_weight >= 0.0 &&
        anchor.steer_rate_weight >= 0.0)) {
    throw ConfigError("anchor weights must be non-negative");
  }
  if (sv.policy != "conservative" && sv.policy != "aggressive" && sv.policy != "idle" &&
      sv.policy != "external") {
    throw ConfigError("unknown SV policy '" + sv.policy + "'");
  }
  if (povs.empty()) throw ConfigError("at least one POV is required");

  std::set<std::string> ids{sv.id};
  for (const auto& p : povs) {
    if (p.id.empty()) throw ConfigError("POV id must not be empty");
    if (!ids.insert(p.id).second) throw ConfigError("duplicate vehicle id '" + p.id + "'");
  }
  try {
    sv.init.validate();
    for (const auto& p : povs) p.init.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("initial state: ") + e.what());
  }

  for (std::size_t i = 0; i < povs.size(); ++i) {
    const PovConfig& p = povs[i];
    if (p.assignment.lanes) {
      const auto [lo, hi] = *p.assignment.lanes;
      if (lo < 0 || hi >= road.lane_count || lo > hi) {
        throw ConfigError("POV '" + p.id + "' lane range outside the road");
      }
    }
    const auto [lo, hi] = pov_center_band(*this, i);
    if (!(lo <= hi)) throw ConfigError("POV '" + p.id + "' has an empty lateral band");
    for (const auto& o : p.assignment.ordering) {
      if (o.other == p.id) throw ConfigError("POV '" + p.id + "' is ordered against itself");
      if (!pov_index(o.other)) {
        throw ConfigError("POV '" + p.id + "' orders against unknown POV '" + o.other + "'");
      }
      if (!(o.gap >= 0.0)) throw ConfigError("ordering gap must be non-negative");
    }
  }

  for (std::size_t i = 0; i < povs.size(); ++i) {
    for (std::size_t j = i + 1; j < povs.size(); ++j) {
      const auto bi = pov_center_band(*this, i);
      const auto bj = pov_center_band(*this, j);
      const double wi = 0.5 * povs[i].dims.width;
      const double wj = 0.5 * povs[j].dims.width;
      const bool disjoint = bi.second + wi <= bj.first - wj || bj.second + wj <= bi.first - wi;
      if (disjoint) continue;
      auto orders = [&](const PovConfig& a, const PovConfig& b) {
        return std::any_of(a.assignment.ordering.begin(), a.assignment.ordering.end(),
                           [&](const Ordering& o) { return o.other == b.id; });
      };
      if (!orders(povs[i], povs[j]) && !orders(povs[j], povs[i])) {
        throw ConfigError("POVs '" + povs[i].id + "' and '" + povs[j].id +
                          "' share lateral space without an ordering");
      }
    }
  }

  std::vector<std::pair<VehicleState, VehicleDims>> all{{sv.init, sv.dims}};
  for (const auto& p : povs) all.emplace_back(p.init, p.dims);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (rect_collision(all[i].first, all[i].second, all[j].first, all[j].second)) {
        throw ConfigError("initial state has overlapping vehicles");
      }
    }
  }
}

json config_to_json(const EngineConfig& c) {
  json j = json::object();
  j["name"] = c.name;
  j["description"] = c.description;

  json sim = json::object();
  sim["delta"] = c.sim.delta;
  sim["t_bar"] = c.sim.t_bar;
  sim["timeout"] = c.sim.timeout;
  sim["capture_diameter"] = c.sim.capture_diameter;
  sim["seed"] = c.sim.seed;
  sim["capture_terminal"] = c.sim.capture_terminal;
  j["sim"] = sim;

  json road = json::object();
  road["lane_count"] = c.road.lane_count;
  road["lane_width"] = c.road.lane_width;
  j["road"] = road;

  json cons = json::object();
  cons["action_box"] = box_to_json(c.constraints.box);
  cons["v_range"] = json::array({c.constraints.v_range.min, c.constraints.v_range.max});
  cons["phi_max"] = c.constraints.phi_max;
  cons["kamm"] = c.constraints.kamm;
  j["constraints"] = cons;

  json pl = json::object();
  pl["q_r"] = matrix_to_json(c.planner.weights.q_r);
  pl["q_f"] = matrix_to_json(c.planner.weights.q_f);
  pl["minimax_tol"] = c.planner.minimax_tol;
  pl["max_sweeps"] = c.planner.max_sweeps;
  pl["steady_state"] = c.planner.steady_state;
  pl["band_margin"] = c.planner.band_margin;
  pl["rear_gap"] = c.planner.rear_gap;
  j["planner"] = pl;

  json an = json::object();
  an["wheelbase"] = c.anchor.bicycle.wheelbase;
  an["steer_max"] = c.anchor.bicycle.steer_max;
  an["steer_rate_max"] = c.anchor.bicycle.steer_rate_max;
  an["accel_weight"] = c.anchor.accel_weight;
  an["steer_weight"] = c.anchor.steer_weight;
  an["steer_rate_weight"] = c.anchor.steer_rate_weight;
  j["anchor"] = an;

  json veh = json::array();
  json sv = json::object();
  sv["id"] = c.sv.id;
  sv["role"] = "sv";
  sv["init"] = state_to_json(c.sv.init);
  sv["dims"] = dims_to_json(c.sv.dims);
  sv["policy"] = c.sv.policy;
  sv["params"] = sv_params_to_json(c.sv.params);
  veh.push_back(sv);
  for (const auto& p : c.povs) {
    json pj = json::object();
    pj["id"] = p.id;
    pj["role"] = "pov";
    pj["init"] = state_to_json(p.init);
    pj["dims"] = dims_to_json(p.dims);
    pj["assignment"] = assignment_to_json(p.assignment);
    veh.push_back(pj);
  }
  j["vehicles"] = veh;
  return j;
}

EngineConfig config_from_json(const json& j) {
  check_keys(j, "config",
             {"name", "description", "sim", "road", "constraints", "planner", "anchor",
              "vehicles"});
  EngineConfig c;
  read(j, "name", "config", c.name);
  read(j, "description", "config", c.description);

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s, "sim",
               {"delta", "t_bar", "timeout", "capture_diameter", "seed", "capture_terminal"});
    read(s, "delta", "sim", c.sim.delta);
    read(s, "t_bar", "sim", c.sim.t_bar);
    read(s, "timeout", "sim", c.sim.timeout);
    read(s, "capture_diameter", "sim", c.sim.capture_diameter);
    read(s, "seed", "sim", c.sim.seed);
    read(s, "capture_terminal", "sim", c.sim.capture_terminal);
  }
  if (j.contains("road")) {
    const json& r = j.at("road");
    check_keys(r, "road", {"lane_count", "lane_width"});
    read(r, "lane_count", "road", c.road.lane_count);
    read(r, "lane_width", "road", c.road.lane_width);
  }
  if (j.contains("constraints")) {
    const json& k = j.at("constraints");
    check_keys(k, "constraints", {"action_box", "v_range", "phi_max", "kamm"});
    if (k.contains("action_box")) {
      c.constraints.box = box_from_json(k.at("action_box"), "constraints.action_box", c.constraints.box);
    }
    if (k.contains("v_range")) {
      const auto v = number_array(k.at("v_range"), "constraints.v_range", 2);
      c.constraints.v_range = {v[0], v[1]};
    }
    read(k, "phi_max", "constraints", c.constraints.phi_max);
    read(k, "kamm", "constraints", c.constraints.kamm);
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    check_keys(p, "planner",
               {"q_r", "q_f", "minimax_tol", "max_sweeps", "steady_state", "band_margin",
                "rear_gap"});
    if (p.contains("q_r")) c.planner.weights.q_r = matrix_from_json(p.at("q_r"), "planner.q_r");
    if (p.contains("q_f")) c.planner.weights.q_f = matrix_from_json(p.at("q_f"), "planner.q_f");
    read(p, "minimax_tol", "planner", c.planner.minimax_tol);
    read(p, "max_sweeps", "planner", c.planner.max_sweeps);
    read(p, "steady_state", "planner", c.planner.steady_state);
    read(p, "band_margin", "planner", c.planner.band_margin);
    read(p, "rear_gap", "planner", c.planner.rear_gap);
  }
  if (j.contains("anchor")) {
    const json& a = j.at("anchor");
    check_keys(a, "anchor",
               {"wheelbase", "steer_max", "steer_rate_max", "accel_weight", "steer_weight",
                "steer_rate_weight"});
    read(a, "wheelbase", "anchor", c.anchor.bicycle.wheelbase);
    read(a, "steer_max", "anchor", c.anchor.bicycle.steer_max);
    read(a, "steer_rate_max", "anchor", c.anchor.bicycle.steer_rate_max);
    read(a, "accel_weight", "anchor", c.anchor.accel_weight);
    read(a, "steer_weight", "anchor", c.anchor.steer_weight);
    read(a, "steer_rate_weight", "anchor", c.anchor.steer_rate_weight);
  }

  if (!j.contains("vehicles")) fail("config", "missing 'vehicles'");
  const json& veh = j.at("vehicles");
  if (!veh.is_array()) fail("vehicles", "expected an array");
  bool have_sv = false;
  for (std::size_t i = 0; i < veh.size(); ++i) {
    const std::string path = "vehicles[" + std::to_string(i) + "]";
    const json& v = veh[i];
    check_object(v, path);
    std::string role;
    read(v, "role", path, role);
    if (role == "sv") {
      if (have_sv) fail(path, "more than one SV");
      have_sv = true;
      check_keys(v, path, {"id", "role", "init", "dims", "policy", "params"});
      read(v, "id", path, c.sv.id);
      if (!v.contains("init")) fail(path, "missing 'init'");
      c.sv.init = state_from_json(v.at("init"), path + ".init");
      if (v.contains("dims")) c.sv.dims = dims_from_json(v.at("dims"), path + ".dims");
      read(v, "policy", path, c.sv.policy);
      c.sv.params = preset(c.sv.policy, path + ".policy");
      if (v.contains("params")) sv_params_from_json(v.at("params"), path + ".params", c.sv.params);
    } else if (role == "pov") {
      check_keys(v, path, {"id", "role", "init", "dims", "assignment"});
      PovConfig p;
      p.id = "pov" + std::to_string(c.povs.size() + 1);
      read(v, "id", path, p.id);
      if (!v.contains("init")) fail(path, "missing 'init'");
      p.init = state_from_json(v.at("init"), path + ".init");
      if (v.contains("dims")) p.dims = dims_from_json(v.at("dims"), path + ".dims");
      if (v.contains("assignment")) {
        p.assignment = assignment_from_json(v.at("assignment"), path + ".assignment");
      }
      c.povs.push_back(p);
    } else {
      fail(path + ".role", "expected 'sv' or 'pov'");
    }
  }
  if (!have_sv) fail("vehicles", "no SV entry");
  c.sv.params.road = c.road;
  c.validate();
  return c;
}

EngineConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const EngineConfig& c) { return config_to_json(c).dump(2); }

std::string config_digest(const EngineConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace adversim
