#pragma once

#include <optional>
#include <vector>

#include "adversim/template_model.hpp"

namespace adversim {

/// One SV-POV pair with the admissible spaces and template matrices used to
/// plan against it. Both matrices must share the same time step.
struct Encounter {
  VehicleState sv;
  VehicleState pov;
  AdmissibleSpace sv_space;
  AdmissibleSpace pov_space;
  TemplateMatrices sv_mats;
  TemplateMatrices pov_mats;
};

struct MinimaxOptions {
  /// Convergence threshold on the value gained by an SV step (m^2).
  double tol = 1e-4;
  int max_sweeps = 20;
  /// Control-energy weight that makes the POV step strictly convex.
  double control_weight = 1e-6;
  double qp_tol = 1e-7;
  int qp_max_iter = 400;
};

/// Value after one half-step of the iteration.
struct HalfStep {
  enum class Kind { Pov, Sv };
  Kind kind = Kind::Pov;
  double value = 0.0;
};

/// Outcome of the minimax search for one horizon.
///
/// The POV step minimizes the largest final squared distance over every SV
/// response collected so far; the SV step adds the exact best response, the
/// vertex of the SV's reachable end-point polygon farthest from the POV's
/// planned end point. The polygon comes from support-function LPs over the
/// SV action and state rows.
/// `value` is the largest final squared distance of the POV plan over the
/// collected responses, so it never decreases across an SV step and never
/// increases across a POV step.
struct MinimaxResult {
  std::vector<TemplateControl> pov_controls;
  std::vector<TemplateControl> sv_controls;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// State rows were slackened because a start state or the start rollout
  /// violated them.
  bool relaxed = false;
  std::vector<HalfStep> log;
};

MinimaxResult best_response_minimax(const Encounter& enc, int steps,
                                    const MinimaxOptions& options = {});

/// Scan record for one candidate horizon.
struct ScanEntry {
  int steps = 0;
  /// Skipped because the reachability lower bound already exceeds c^2.
  bool pruned = false;
  double lower_bound = 0.0;
  std::optional<double> value;
  bool converged = false;
};

struct CaptureResult {
  double t_star = 0.0;
  int steps = 0;
  /// POV template rollout, steps + 1 states.
  std::vector<VehicleState> reference;
  MinimaxResult minimax;
};

struct CaptureSearch {
  std::optional<CaptureResult> capture;
  std::vector<ScanEntry> scan;
};

/// Scans horizons Delta, 2 Delta, ..., t_bar in order and stops at the first
/// one whose converged minimax value is <= c^2.
CaptureSearch search_capture(const Encounter& enc, double c, double t_bar,
                             const MinimaxOptions& options = {});

std::optional<CaptureResult> find_min_capture_time(const Encounter& enc, double c,
                                                   double t_bar,
                                                   const MinimaxOptions& options = {});

/// Rolled-out POV reference of the capture plan, if any.
std::optional<std::vector<VehicleState>> plan_worst_case(
    const Encounter& enc, double c, double t_bar, const MinimaxOptions& options = {});

/// Number of whole steps in `t`; throws unless t is a positive multiple of delta.
int horizon_steps(double t, double delta);

}  // namespace adversim
