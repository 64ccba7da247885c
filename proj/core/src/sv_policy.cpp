#include "adversim/sv_policy.hpp"

#include <algorithm>
#include <cmath>

namespace adversim {

void IdmParams::validate() const {
  if (!(v0 > 0.0) || !(t_headway > 0.0) || !(a_max > 0.0) || !(b_comf > 0.0) ||
      !(s0 > 0.0) || !(delta_exp > 0.0)) {
    throw Error("IDM parameters must be positive");
  }
}

void LaneChangeParams::validate() const {
  if (!(lead_gap_min > 0.0) || !(lag_gap_min > 0.0) || !(cooldown > 0.0) ||
      !(pd_kp > 0.0) || !(pd_kd > 0.0) || !(yaw_rate_max > 0.0)) {
    throw Error("lane-change parameters must be positive");
  }
  if (min_gain < 0.0) throw Error("lane-change min_gain must be non-negative");
}

int Road::lane_of(double y) const {
  const int lane = static_cast<int>(std::floor(y / lane_width));
  return std::clamp(lane, 0, lane_count - 1);
}

double idm_accel(double v, double gap, double closing_speed, bool lead_exists,
                 const IdmParams& p, const ActionBounds& box) {
  double a = p.a_max * (1.0 - std::pow(std::max(v, 0.0) / p.v0, p.delta_exp));
  if (lead_exists) {
    const double g = std::max(gap, 1e-3);
    const double dyn = v * p.t_headway + v * closing_speed / (2.0 * std::sqrt(p.a_max * p.b_comf));
    const double s_star = p.s0 + std::max(0.0, dyn);
    a -= p.a_max * (s_star / g) * (s_star / g);
  }
  return std::clamp(a, box.ax_min, box.ax_max);
}

double lateral_pd(double y_err, double heading_err, double v, const LaneChangeParams& p,
                  const ActionBounds& box) {
  double a_y = -(p.pd_kp * y_err + p.pd_kd * v * std::sin(heading_err));
  const double yaw_cap = p.yaw_rate_max * std::max(v, 0.0);
  a_y = std::clamp(a_y, -yaw_cap, yaw_cap);
  return std::clamp(a_y, box.ay_min, box.ay_max);
}

SvPolicyParams SvPolicyParams::conservative(double v0) {
  SvPolicyParams p;
  p.idm.v0 = v0;
  return p;
}

SvPolicyParams SvPolicyParams::aggressive(double v0) {
  SvPolicyParams p;
  p.idm.v0 = v0;
  p.idm.a_max = 2.6;
  p.idm.t_headway = 1.0;
  p.box = {-3.0, 2.6, -2.0, 2.0};
  p.lane_change.lead_gap_min = 0.5;
  p.lane_change.lag_gap_min = 0.8;
  p.lane_change.pd_kp = 1.0;
  p.lane_change.pd_kd = 2.0;
  return p;
}

void SvPolicyParams::validate() const {
  idm.validate();
  lane_change.validate();
  if (!(box.ax_min < box.ax_max) || !(box.ay_min < box.ay_max)) {
    throw Error("SV action box needs min < max");
  }
  if (road.lane_count < 1 || !(road.lane_width > 0.0)) throw Error("invalid road");
  if (merge_lane && (*merge_lane < 0 || *merge_lane >= road.lane_count)) {
    throw Error("merge lane outside the road");
  }
}

namespace {

VehicleDims dims_of(const SvPolicyParams& p, std::size_t idx) {
  return idx < p.dims.size() ? p.dims[idx] : VehicleDims{};
}

bool occupies(const VehicleState& s, const VehicleDims& d, int lane, const Road& road) {
  const double lo = lane * road.lane_width;
  const double hi = lo + road.lane_width;
  const double overlap = std::min(hi, s.y + 0.5 * d.width) - std::max(lo, s.y - 0.5 * d.width);
  return overlap > 0.3;
}

std::optional<Neighbor> neighbor(const Snapshot& s, int lane, const SvPolicyParams& p,
                                 bool ahead) {
  if (lane < 0 || lane >= p.road.lane_count) return std::nullopt;
  const VehicleDims sv_dims = dims_of(p, 0);
  std::optional<Neighbor> best;
  for (std::size_t j = 0; j < s.povs.size(); ++j) {
    const VehicleState& o = s.povs[j];
    const VehicleDims od = dims_of(p, j + 1);
    if (!occupies(o, od, lane, p.road)) continue;
    const double dx = o.x - s.sv.x;
    if (ahead ? dx <= 0.0 : dx > 0.0) continue;
    const double dist = std::abs(dx);
    if (best && dist >= best->distance) continue;
    Neighbor n;
    n.pov = j;
    n.distance = dist;
    n.gap = std::max(0.1, dist - 0.5 * (sv_dims.length + od.length));
    n.speed = o.v * std::cos(o.phi);
    best = n;
  }
  return best;
}

double lane_accel(const Snapshot& s, int lane, const SvPolicyParams& p) {
  const auto lead = lead_in_lane(s, lane, p);
  if (!lead) return idm_accel(s.sv.v, 0.0, 0.0, false, p.idm, p.box);
  return idm_accel(s.sv.v, lead->gap, s.sv.v - lead->speed, true, p.idm, p.box);
}

}  // namespace

std::optional<Neighbor> lead_in_lane(const Snapshot& s, int lane, const SvPolicyParams& p) {
  return neighbor(s, lane, p, true);
}

std::optional<Neighbor> lag_in_lane(const Snapshot& s, int lane, const SvPolicyParams& p) {
  return neighbor(s, lane, p, false);
}

std::optional<int> lane_change_decision(const Snapshot& s, const PolicyState& state,
                                        const SvPolicyParams& p) {
  if (state.target_lane || state.cooldown_remaining > 0.0) return std::nullopt;
  const int cur = state.current_lane;
  if (p.merge_lane && *p.merge_lane == cur) return std::nullopt;
  const double v = s.sv.v;
  const double a_cur = lane_accel(s, cur, p);
  std::optional<int> pick;
  double best_gain = 0.0;
  for (int cand : {cur + 1, cur - 1}) {
    if (cand < 0 || cand >= p.road.lane_count) continue;
    const auto lead = lead_in_lane(s, cand, p);
    const auto lag = lag_in_lane(s, cand, p);
    if (lead && lead->distance / std::max(v, 1.0) < p.lane_change.lead_gap_min) continue;
    if (lag && lag->distance / std::max(lag->speed, 1.0) < p.lane_change.lag_gap_min) continue;
    if (p.merge_lane) {
      const bool toward = std::abs(*p.merge_lane - cand) < std::abs(*p.merge_lane - cur);
      if (toward && !pick) pick = cand;
      continue;
    }
    const double gain = lane_accel(s, cand, p) - a_cur;
    if (gain > p.lane_change.min_gain && (!pick || gain > best_gain)) {
      best_gain = gain;
      pick = cand;
    }
  }
  return pick;
}

PolicyOutput policy_step(const Snapshot& s, const PolicyState& state,
                         const SvPolicyParams& p, double delta) {
  PolicyOutput out;
  PolicyState& st = out.state;
  st = state;
  st.cooldown_remaining = std::max(0.0, st.cooldown_remaining - delta);
  if (st.cooldown_remaining < 1e-9) st.cooldown_remaining = 0.0;
  if (!st.target_lane) {
    st.current_lane = p.road.lane_of(s.sv.y);
    st.target_lane = lane_change_decision(s, st, p);
  }

  double a_x = lane_accel(s, st.current_lane, p);
  if (st.target_lane) a_x = std::min(a_x, lane_accel(s, *st.target_lane, p));

  const int lane = st.target_lane.value_or(st.current_lane);
  const double y_err = s.sv.y - p.road.center(lane);
  const double heading = wrap_angle(s.sv.phi);
  const double a_y = lateral_pd(y_err, heading, s.sv.v, p.lane_change, p.box);

  if (st.target_lane && std::abs(y_err) < 0.2 && std::abs(heading) < 0.02) {
    st.current_lane = *st.target_lane;
    st.target_lane.reset();
    st.cooldown_remaining = p.lane_change.cooldown;
  }
  out.control = p.box.clamp({a_x, a_y});
  st.last_control = out.control;
  return out;
}

ExternalPolicy::ExternalPolicy(BicycleParams params, ActionBounds box)
    : params_(params), box_(box) {
  params_.validate();
}

void ExternalPolicy::set_command(double a, double steer, double t) {
  if (!std::isfinite(a) || !std::isfinite(steer)) return;
  AnchorControl c{std::clamp(a, box_.ax_min, box_.ax_max),
                  std::clamp(steer, -params_.steer_max, params_.steer_max)};
  std::lock_guard<std::mutex> lock(mu_);
  cmd_ = c;
  stamp_ = t;
}

AnchorControl ExternalPolicy::take_control(double t_now) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!cmd_) return {};
  const double age = t_now - stamp_;
  if (age <= kStaleAfter + 1e-9) return *cmd_;
  const double decay = params_.steer_rate_max * (age - kStaleAfter);
  const double mag = std::max(0.0, std::abs(cmd_->steer) - decay);
  return {0.0, std::copysign(mag, cmd_->steer)};
}

void ExternalPolicy::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  cmd_.reset();
  stamp_ = 0.0;
}

ModelDriver::ModelDriver(SvPolicyParams params, BicycleParams bicycle)
    : params_(std::move(params)), bicycle_(bicycle) {
  params_.validate();
  bicycle_.validate();
}

void ModelDriver::reset(const Snapshot& initial) {
  state_ = PolicyState{};
  state_.current_lane = params_.road.lane_of(initial.sv.y);
}

AnchorControl ModelDriver::act(const Snapshot& s, double delta) {
  PolicyOutput out = policy_step(s, state_, params_, delta);
  state_ = out.state;
  return template_to_anchor(out.control, s.sv.v, bicycle_);
}

ExternalDriver::ExternalDriver(std::shared_ptr<ExternalPolicy> policy)
    : policy_(std::move(policy)) {
  if (!policy_) throw Error("external driver needs a policy");
}

void ExternalDriver::reset(const Snapshot&) {}

AnchorControl ExternalDriver::act(const Snapshot& s, double) {
  return policy_->take_control(s.t);
}

}  // namespace adversim
