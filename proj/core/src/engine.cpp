#include "adversim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "adversim/predictive.hpp"

namespace adversim {

std::string to_string(PlanMode m) {
  switch (m) {
    case PlanMode::WorstCase: return "worst_case";
    case PlanMode::Predictive: return "predictive";
    case PlanMode::LaneKeep: return "lane_keep";
    case PlanMode::Fallback: return "fallback";
  }
  return "fallback";
}

namespace {

constexpr double kMinLinearizationSpeed = 1.0;

int horizon_of(const EngineConfig& c) { return horizon_steps(c.sim.t_bar, c.sim.delta); }

double sign_of(Direction d) { return static_cast<double>(static_cast<int>(d)); }

TemplateMatrices mats_for(const VehicleState& s, double delta) {
  return build_matrices(std::max(s.v, kMinLinearizationSpeed), delta, direction_of(s.phi));
}

// Position along direction d over the horizon when accelerating at `accel`
// with the speed kept inside [v_lo, v_hi].
std::vector<double> extreme_positions(const VehicleState& s, double d, double accel, double v_lo,
                                      double v_hi, double delta, int steps) {
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(steps) + 1);
  double pos = d * s.x;
  double v = std::max(0.0, s.v * std::cos(s.phi) * d);
  p.push_back(pos);
  for (int k = 0; k < steps; ++k) {
    pos += v * delta;
    v = std::clamp(v + accel * delta, v_lo, v_hi);
    p.push_back(pos);
  }
  return p;
}

TimedRow along_row(double d, double sign, const std::vector<double>& rhs) {
  TimedRow r;
  r.g = Eigen::Vector4d(sign * d, 0.0, 0.0, 0.0);
  r.h = rhs;
  return r;
}

}  // namespace

AdmissibleSpace sv_admissible_space(const EngineConfig& c) {
  const ConstraintParams& k = c.constraints;
  return AdmissibleSpace(default_action_polytope(k.box, k.kamm),
                         lane_state_polytope(c.road.lane_count, c.road.lane_width, k.v_range,
                                             c.sv.dims.width, k.phi_max),
                         k.box);
}

std::vector<PovAssignment> assign_pov_constraints(const EngineConfig& c, const Snapshot& s) {
  const ConstraintParams& k = c.constraints;
  const int steps = horizon_of(c);
  const double delta = c.sim.delta;
  const Polytope action = default_action_polytope(k.box, k.kamm);
  std::vector<PovAssignment> out;
  out.reserve(c.povs.size());

  for (std::size_t i = 0; i < c.povs.size(); ++i) {
    const PovConfig& pc = c.povs[i];
    const VehicleState& pov = s.povs.at(i);
    const auto band = pov_center_band(c, i);
    Polytope state = lane_state_polytope(c.road.lane_count, c.road.lane_width, k.v_range,
                                         pc.dims.width, k.phi_max);
    Eigen::Vector4d e_y(0.0, 1.0, 0.0, 0.0);
    state = state.with_row(e_y, band.second).with_row(-e_y, -band.first);

    std::vector<TimedRow> timed;
    const Direction dir = direction_of(pov.phi);
    const double d = sign_of(dir);

    if (pc.assignment.no_rear_end && direction_of(s.sv.phi) == dir &&
        std::abs(pov.y - s.sv.y) < c.road.lane_width) {
      const double v_floor = std::min(std::max(s.sv.v, 0.0), k.v_range.min);
      const auto sv_lb = extreme_positions(s.sv, d, k.box.ax_min, v_floor, k.v_range.max,
                                           delta, steps);
      const double len = 0.5 * (c.sv.dims.length + pc.dims.length);
      std::vector<double> rhs(sv_lb.size());
      if (d * (pov.x - s.sv.x) > 0.0) {
        // Ahead: -d x <= -(p_lb + len).
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = -(sv_lb[j] + len);
        timed.push_back(along_row(d, -1.0, rhs));
      } else {
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = sv_lb[j] - (len + c.planner.rear_gap);
        timed.push_back(along_row(d, 1.0, rhs));
      }
    }

    for (const Ordering& o : pc.assignment.ordering) {
      const std::size_t j = *c.pov_index(o.other);
      const VehicleState& other = s.povs.at(j);
      const double sep = o.gap + 0.5 * (pc.dims.length + c.povs[j].dims.length);
      std::vector<double> rhs;
      if (o.ahead) {
        const auto ub = extreme_positions(other, d, k.box.ax_max, 0.0, k.v_range.max, delta, steps);
        for (double p : ub) rhs.push_back(-(p + sep));
        timed.push_back(along_row(d, -1.0, rhs));
      } else {
        const auto lb = extreme_positions(other, d, k.box.ax_min, 0.0, k.v_range.max, delta, steps);
        for (double p : lb) rhs.push_back(p - sep);
        timed.push_back(along_row(d, 1.0, rhs));
      }
    }

    PovAssignment a;
    a.pov = i;
    a.band = band;
    a.no_rear_end = pc.assignment.no_rear_end;
    a.space = AdmissibleSpace(action, state, k.box, std::move(timed));
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<VehicleState> lane_keep_reference(const EngineConfig& c, const VehicleState& pov,
                                              const std::pair<double, double>& band) {
  const int steps = horizon_of(c);
  const TemplateMatrices mats = mats_for(pov, c.sim.delta);
  const double d = sign_of(mats.direction);
  const double target = std::clamp(c.road.center(c.road.lane_of(pov.y)), band.first, band.second);
  const LaneChangeParams pd;
  std::vector<VehicleState> ref{pov};
  ref.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k < steps; ++k) {
    const VehicleState& s = ref.back();
    const double heading = wrap_angle(s.phi - lane_heading(mats.direction));
    const double a_y = lateral_pd(d * (s.y - target), heading, s.v, pd, c.constraints.box);
    ref.push_back(step(s, {0.0, a_y}, mats));
  }
  return ref;
}

PlanResult plan_pov(const EngineConfig& c, const Snapshot& s, std::size_t pov,
                    const TemplateControl& sv_estimate, const AdmissibleSpace& sv_space,
                    const PovAssignment& assignment, const CaptureHook& hook) {
  const VehicleState& p = s.povs.at(pov);
  const PlannerKind kind = c.povs.at(pov).assignment.planner;
  PlanResult r;
  if (kind == PlannerKind::LaneKeep) {
    r.mode = PlanMode::LaneKeep;
    r.reference = lane_keep_reference(c, p, assignment.band);
    return r;
  }

  const int steps = horizon_of(c);
  const TemplateMatrices pov_mats = mats_for(p, c.sim.delta);
  const TemplateMatrices sv_mats = mats_for(s.sv, c.sim.delta);
  std::string fault;

  if (kind == PlannerKind::Adversarial) {
    Encounter enc{s.sv, p, sv_space, assignment.space, sv_mats, pov_mats};
    MinimaxOptions opts;
    opts.tol = c.planner.minimax_tol;
    opts.max_sweeps = c.planner.max_sweeps;
    try {
      CaptureSearch search = search_capture(enc, c.sim.capture_diameter, c.sim.t_bar, opts);
      if (search.capture) {
        CaptureResult& cap = *search.capture;
        r.mode = PlanMode::WorstCase;
        r.t_star = cap.t_star;
        r.relaxed = cap.minimax.relaxed;
        r.reference = cap.reference;
        while (static_cast<int>(r.reference.size()) < steps + 1) {
          r.reference.push_back(step(r.reference.back(), {}, pov_mats));
        }
        if (hook) hook({s.t, pov, c.sim.capture_diameter, enc, cap});
        return r;
      }
    } catch (const Error& e) {
      fault = std::string("worst-case: ") + e.what();
    }
  }

  try {
    const SvPrediction pred = predict_sv(s.sv, sv_estimate, c.sim.t_bar, sv_mats, sv_space,
                                         c.planner.steady_state);
    TrackingPlan plan = plan_tracking(p, pred, c.planner.weights, assignment.space, pov_mats);
    r.mode = PlanMode::Predictive;
    r.relaxed = plan.relaxed;
    r.reference = std::move(plan.reference);
    if (!fault.empty()) r.fault = fault;
    return r;
  } catch (const Error& e) {
    fault += (fault.empty() ? "" : "; ") + std::string("predictive: ") + e.what();
  }

  r.mode = PlanMode::Fallback;
  r.fault = fault;
  r.reference = lane_keep_reference(c, p, assignment.band);
  return r;
}

std::vector<PlanResult> plan_tick(const EngineConfig& c, const Snapshot& s,
                                  const TemplateControl& sv_estimate,
                                  const std::vector<PovAssignment>& assignments,
                                  const CaptureHook& hook) {
  const AdmissibleSpace sv_space = sv_admissible_space(c);
  std::vector<PlanResult> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) {
    out.push_back(plan_pov(c, s, a.pov, sv_estimate, sv_space, a, hook));
  }
  return out;
}

std::unique_ptr<SvDriver> make_driver(const EngineConfig& c,
                                      std::shared_ptr<ExternalPolicy> external) {
  if (c.sv.policy == "idle") return std::make_unique<IdleDriver>();
  if (c.sv.policy == "external") {
    if (!external) external = std::make_shared<ExternalPolicy>(c.anchor.bicycle, c.sv.params.box);
    return std::make_unique<ExternalDriver>(std::move(external));
  }
  SvPolicyParams params = c.sv.params;
  params.road = c.road;
  params.dims.clear();
  params.dims.push_back(c.sv.dims);
  for (const auto& p : c.povs) params.dims.push_back(p.dims);
  return std::make_unique<ModelDriver>(std::move(params), c.anchor.bicycle);
}

Engine::Engine(EngineConfig config, std::shared_ptr<ExternalPolicy> external)
    : config_(std::move(config)), external_(std::move(external)) {
  config_.validate();
  config_.sv.params.road = config_.road;
  if (config_.sv.policy == "external" && !external_) {
    external_ = std::make_shared<ExternalPolicy>(config_.anchor.bicycle, config_.sv.params.box);
  }
  driver_ = make_driver(config_, external_);
  for (std::size_t i = 0; i < config_.povs.size(); ++i) {
    mpcs_.emplace_back(config_.anchor.bicycle, config_.planner.weights, config_.sim.delta,
                       config_.anchor.mpc_options());
  }
  reset();
}

std::vector<VehicleDims> Engine::dims() const {
  std::vector<VehicleDims> d{config_.sv.dims};
  for (const auto& p : config_.povs) d.push_back(p.dims);
  return d;
}

double Engine::time_of(long tick) const {
  return std::round(static_cast<double>(tick) * config_.sim.delta * 1e9) / 1e9;
}

void Engine::reset() {
  snapshot_ = Snapshot{};
  snapshot_.sv = config_.sv.init;
  for (const auto& p : config_.povs) snapshot_.povs.push_back(p.init);
  snapshot_.t = 0.0;
  previous_.reset();
  tick_ = 0;
  timeout_ticks_ = std::lround(config_.sim.timeout / config_.sim.delta);
  captured_.assign(config_.povs.size(), false);
  plans_.clear();
  records_.clear();
  plan_ms_.clear();
  log_ = RunLog{};
  log_.ids.push_back(config_.sv.id);
  for (const auto& p : config_.povs) log_.ids.push_back(p.id);
  log_.config_digest = config_digest(config_);
  driver_->reset(snapshot_);
  for (auto& m : mpcs_) m.reset();
  if (external_) external_->clear();
  stop_.store(false);
}

std::optional<TerminationReason> Engine::check_termination() {
  const double t = snapshot_.t;
  for (std::size_t j = 0; j < snapshot_.povs.size(); ++j) {
    if (rect_collision(snapshot_.sv, config_.sv.dims, snapshot_.povs[j], config_.povs[j].dims)) {
      return TerminationReason::collision(j, t);
    }
  }
  const std::vector<bool> caps = capture_check(snapshot_, config_.sim.capture_diameter);
  std::optional<TerminationReason> capture;
  for (std::size_t j = 0; j < caps.size(); ++j) {
    if (caps[j] && !captured_[j] && !capture && config_.sim.capture_terminal) {
      capture = TerminationReason::capture_only(j, t);
    }
    captured_[j] = caps[j];
  }
  if (capture) return capture;
  if (stop_.load()) return TerminationReason::external_stop(t);
  if (tick_ >= timeout_ticks_) return TerminationReason::timeout(t);
  return std::nullopt;
}

std::optional<TerminationReason> Engine::step() {
  if (log_.termination) return log_.termination;
  const std::size_t k = config_.povs.size();

  LogEntry entry;
  entry.t = snapshot_.t;
  entry.snapshot = snapshot_;

  if (auto term = check_termination()) {
    entry.controls.assign(k + 1, std::nullopt);
    for (std::size_t j = 0; j < k; ++j) {
      entry.modes.push_back(j < plans_.size() ? to_string(plans_[j].mode) : "predictive");
    }
    entry.t_star.assign(k, std::nullopt);
    log_.entries.push_back(std::move(entry));
    log_.termination = term;
    return term;
  }

  const AnchorControl sv_u = driver_->act(snapshot_, config_.sim.delta);
  const TemplateControl estimate =
      previous_ ? estimate_control(previous_->sv, snapshot_.sv, config_.sim.delta)
                : TemplateControl{};

  const auto assignments = assign_pov_constraints(config_, snapshot_);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PlanResult> plans = plan_tick(config_, snapshot_, estimate, assignments, hook_);
  const auto t1 = std::chrono::steady_clock::now();
  plan_ms_.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

  entry.controls.emplace_back(sv_u);
  std::vector<AnchorControl> pov_u(k);
  for (std::size_t j = 0; j < k; ++j) {
    const PlanResult& pr = plans[j];
    if (plans_.size() != k || plans_[j].mode != pr.mode) {
      records_.push_back({snapshot_.t, j, pr.mode, pr.t_star});
    }
    pov_u[j] = mpcs_[j].track(snapshot_.povs[j], pr.reference, assignments[j].space).control;
    entry.controls.emplace_back(pov_u[j]);
    entry.modes.push_back(to_string(pr.mode));
    entry.t_star.push_back(pr.t_star);
  }
  log_.entries.push_back(std::move(entry));
  plans_ = std::move(plans);

  previous_ = snapshot_;
  const BicycleParams& bp = config_.anchor.bicycle;
  snapshot_.sv = anchor_step(snapshot_.sv, sv_u, bp, config_.sim.delta);
  for (std::size_t j = 0; j < k; ++j) {
    snapshot_.povs[j] = anchor_step(snapshot_.povs[j], pov_u[j], bp, config_.sim.delta);
  }
  ++tick_;
  snapshot_.t = time_of(tick_);
  return std::nullopt;
}

TerminationReason Engine::run() {
  while (true) {
    if (auto t = step()) return *t;
  }
}

RunSummary Engine::summary() const {
  return summarize(log_, dims(), config_.sim.capture_diameter);
}

}  // namespace adversim
