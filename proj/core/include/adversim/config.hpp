#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adversim/anchor_mpc.hpp"
#include "adversim/predictive.hpp"
#include "adversim/sv_policy.hpp"
#include "adversim/template_model.hpp"
#include "adversim/worst_case.hpp"

namespace adversim {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SimParams {
  double delta = 0.1;
  double t_bar = 2.0;
  double timeout = 50.0;
  double capture_diameter = 7.0;
  std::uint64_t seed = 0;
  /// End the run on the first l2 capture instead of only logging it.
  bool capture_terminal = false;

  bool operator==(const SimParams&) const = default;
};

struct ConstraintParams {
  ActionBounds box;
  SpeedRange v_range;
  double phi_max = 0.3;
  /// Cut the action box corners with the friction-circle diagonals.
  bool kamm = false;

  bool operator==(const ConstraintParams&) const = default;
};

struct PlannerParams {
  TrackingWeights weights = TrackingWeights::paper_default();
  double minimax_tol = 1e-4;
  int max_sweeps = 20;
  /// Predict the SV with zero control instead of holding its last control.
  bool steady_state = false;
  /// Clearance kept between a POV's body and the edges of its lane band (m).
  double band_margin = 0.5;
  /// Extra bumper gap (m) on top of the vehicle length for the no-rear-end rows.
  double rear_gap = 2.0;

  bool operator==(const PlannerParams&) const = default;
};

struct AnchorParams {
  BicycleParams bicycle;
  double accel_weight = 0.1;
  double steer_weight = 10.0;
  double steer_rate_weight = 50.0;

  MpcOptions mpc_options() const;
  bool operator==(const AnchorParams&) const = default;
};

/// How a POV chooses its reference each tick.
enum class PlannerKind {
  /// Worst-case capture search first, predictive tracking otherwise.
  Adversarial,
  /// Predictive tracking only.
  Predictive,
  /// Constant-speed lane keeping; planners disabled.
  LaneKeep,
};

std::string to_string(PlannerKind k);

/// Longitudinal ordering between two POVs sharing lateral space.
struct Ordering {
  std::string other;
  /// True: this POV stays ahead of `other` (in x) by at least `gap`.
  bool ahead = true;
  double gap = 10.0;

  bool operator==(const Ordering&) const = default;
};

struct PovAssignmentSpec {
  /// Inclusive lane range [first, last].
  std::optional<std::pair<int, int>> lanes;
  /// Explicit lateral band for the vehicle center (m); overrides `lanes`.
  std::optional<std::pair<double, double>> y_band;
  bool no_rear_end = true;
  std::vector<Ordering> ordering;
  PlannerKind planner = PlannerKind::Adversarial;

  bool operator==(const PovAssignmentSpec&) const = default;
};

struct SvConfig {
  std::string id = "sv";
  VehicleState init;
  VehicleDims dims;
  /// "conservative", "aggressive", "idle" or "external".
  std::string policy = "conservative";
  SvPolicyParams params;

  bool operator==(const SvConfig&) const = default;
};

struct PovConfig {
  std::string id;
  VehicleState init;
  VehicleDims dims;
  PovAssignmentSpec assignment;

  bool operator==(const PovConfig&) const = default;
};

struct EngineConfig {
  std::string name = "scenario";
  std::string description;
  SimParams sim;
  Road road;
  ConstraintParams constraints;
  PlannerParams planner;
  AnchorParams anchor;
  SvConfig sv;
  std::vector<PovConfig> povs;

  /// Throws ConfigError on any violated invariant (including an initial
  /// collision and overlapping POV bands without ordering).
  void validate() const;
  /// Index of the POV with this id, if any.
  std::optional<std::size_t> pov_index(const std::string& id) const;
  bool operator==(const EngineConfig&) const = default;
};

/// Lateral band [lo, hi] for the center of POV `i`, from its explicit band or
/// its lane range shrunk by half its width plus the band margin.
std::pair<double, double> pov_center_band(const EngineConfig& c, std::size_t i);

/// Canonical JSON form; keys are emitted in a fixed order.
nlohmann::json config_to_json(const EngineConfig& c);
/// Strict parse: unknown keys, wrong types and invalid values raise ConfigError.
EngineConfig config_from_json(const nlohmann::json& j);

EngineConfig parse_config(const std::string& text);
std::string serialize_config(const EngineConfig& c);

/// FNV-1a 64-bit digest of the canonical JSON, as 16 hex digits.
std::string config_digest(const EngineConfig& c);

}  // namespace adversim
