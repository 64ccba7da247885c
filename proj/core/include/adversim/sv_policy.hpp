#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "adversim/anchor_mpc.hpp"
#include "adversim/template_model.hpp"

namespace adversim {

struct IdmParams {
  double v0 = 25.0;
  double t_headway = 1.5;
  double a_max = 0.67;
  double b_comf = 1.7;
  double s0 = 2.0;
  double delta_exp = 4.0;

  void validate() const;
  bool operator==(const IdmParams&) const = default;
};

struct LaneChangeParams {
  double lead_gap_min = 1.0;
  double lag_gap_min = 1.5;
  double cooldown = 3.0;
  double pd_kp = 0.6;
  double pd_kd = 1.6;
  double yaw_rate_max = 0.25;
  /// Acceleration advantage (m/s^2) the candidate lane must offer.
  double min_gain = 0.05;

  void validate() const;
  bool operator==(const LaneChangeParams&) const = default;
};

struct Road {
  int lane_count = 3;
  double lane_width = 3.7;

  double center(int lane) const { return (lane + 0.5) * lane_width; }
  /// Lane containing y, clamped to the road.
  int lane_of(double y) const;
  bool operator==(const Road&) const = default;
};

struct PolicyState {
  int current_lane = 0;
  std::optional<int> target_lane;
  double cooldown_remaining = 0.0;
  TemplateControl last_control;
};

/// IDM acceleration clamped to [box.ax_min, box.ax_max]:
///   a = a_max [1 - (v / v0)^delta - (s* / gap)^2],
///   s* = s0 + max(0, v T + v dv / (2 sqrt(a_max b))).
/// The interaction term is dropped when there is no lead.
double idm_accel(double v, double gap, double closing_speed, bool lead_exists,
                 const IdmParams& p, const ActionBounds& box);

/// a_y = -(kp y_err + kd v sin(heading_err)), limited to |a_y| <= yaw_rate_max v
/// and the action box.
double lateral_pd(double y_err, double heading_err, double v, const LaneChangeParams& p,
                  const ActionBounds& box);

/// Full parameter set of the model-based SV driver.
struct SvPolicyParams {
  IdmParams idm;
  LaneChangeParams lane_change;
  ActionBounds box;
  Road road;
  /// Lane the driver wants to end up in regardless of IDM utility.
  std::optional<int> merge_lane;
  /// Dimensions of the SV followed by each POV, in snapshot order.
  std::vector<VehicleDims> dims;

  static SvPolicyParams conservative(double v0 = 25.0);
  /// a_max = 2.6 m/s^2 and a wider action box.
  static SvPolicyParams aggressive(double v0 = 25.0);
  void validate() const;
  bool operator==(const SvPolicyParams&) const = default;
};

/// Nearest vehicle ahead of / behind the SV occupying `lane`.
struct Neighbor {
  std::size_t pov = 0;
  /// Bumper-to-bumper gap (m), at least 0.1.
  double gap = 0.0;
  /// Center distance along x (m).
  double distance = 0.0;
  /// Longitudinal speed (m/s).
  double speed = 0.0;
};

std::optional<Neighbor> lead_in_lane(const Snapshot& s, int lane, const SvPolicyParams& p);
std::optional<Neighbor> lag_in_lane(const Snapshot& s, int lane, const SvPolicyParams& p);

/// Adjacent lane proposal under IDM utility and lead/lag gap acceptance.
/// Left (higher index) wins ties.
std::optional<int> lane_change_decision(const Snapshot& s, const PolicyState& state,
                                        const SvPolicyParams& p);

struct PolicyOutput {
  TemplateControl control;
  PolicyState state;
};

PolicyOutput policy_step(const Snapshot& s, const PolicyState& state,
                         const SvPolicyParams& p, double delta);

/// Human or scripted SV commands with a staleness watchdog. Thread-safe;
/// last writer wins.
class ExternalPolicy {
 public:
  static constexpr double kStaleAfter = 0.5;

  ExternalPolicy(BicycleParams params, ActionBounds box);

  /// Stores a command stamped with simulation time `t`, clamped to the
  /// acceleration bounds and +-steer_max.
  void set_command(double a, double steer, double t);
  /// The held command, or once it is older than 0.5 s: a = 0 and the steer
  /// decaying toward 0 at steer_rate_max.
  AnchorControl take_control(double t_now) const;
  void clear();

 private:
  BicycleParams params_;
  ActionBounds box_;
  mutable std::mutex mu_;
  std::optional<AnchorControl> cmd_;
  double stamp_ = 0.0;
};

/// Source of SV commands used by the engine.
class SvDriver {
 public:
  virtual ~SvDriver() = default;
  virtual void reset(const Snapshot& initial) = 0;
  virtual AnchorControl act(const Snapshot& s, double delta) = 0;
};

/// IDM + lane-change policy mapped to steering with the bicycle model.
class ModelDriver : public SvDriver {
 public:
  ModelDriver(SvPolicyParams params, BicycleParams bicycle);
  void reset(const Snapshot& initial) override;
  AnchorControl act(const Snapshot& s, double delta) override;
  const PolicyState& state() const { return state_; }

 private:
  SvPolicyParams params_;
  BicycleParams bicycle_;
  PolicyState state_;
};

class ExternalDriver : public SvDriver {
 public:
  explicit ExternalDriver(std::shared_ptr<ExternalPolicy> policy);
  void reset(const Snapshot& initial) override;
  AnchorControl act(const Snapshot& s, double delta) override;

 private:
  std::shared_ptr<ExternalPolicy> policy_;
};

/// Always (0, 0).
class IdleDriver : public SvDriver {
 public:
  void reset(const Snapshot&) override {}
  AnchorControl act(const Snapshot&, double) override { return {}; }
};

}  // namespace adversim
