#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adversim/anchor_mpc.hpp"
#include "adversim/config.hpp"
#include "adversim/run_log.hpp"
#include "adversim/sv_policy.hpp"
#include "adversim/worst_case.hpp"

namespace adversim {

enum class PlanMode { WorstCase, Predictive, LaneKeep, Fallback };

std::string to_string(PlanMode m);

struct PlanResult {
  PlanMode mode = PlanMode::Predictive;
  /// POV template reference, t_bar / delta + 1 states.
  std::vector<VehicleState> reference;
  std::optional<double> t_star;
  bool relaxed = false;
  /// Planner error text when both planners failed.
  std::optional<std::string> fault;
};

struct ModeRecord {
  double t = 0.0;
  std::size_t pov = 0;
  PlanMode mode = PlanMode::Predictive;
  std::optional<double> t_star;
};

/// Operable space of one POV for the current tick.
struct PovAssignment {
  std::size_t pov = 0;
  AdmissibleSpace space;
  std::pair<double, double> band;
  bool no_rear_end = true;
};

/// Admissible space the planners assume for the SV.
AdmissibleSpace sv_admissible_space(const EngineConfig& c);

/// Builds every POV's operable space from the current snapshot: the lane
/// polytope, the dedicated band rows, and the per-tick timed rows. With
/// no_rear_end set and the POV laterally overlapping the SV while moving the
/// same way, its x stays ahead of the SV's hard-braking trajectory plus a
/// vehicle length, or behind it by a length plus rear_gap. Ordering entries
/// keep it ahead of (behind) the other POV's full-throttle (full-brake)
/// trajectory by the gap plus the half lengths.
std::vector<PovAssignment> assign_pov_constraints(const EngineConfig& c, const Snapshot& s);

/// Context handed to the capture hook for every capture plan emitted.
struct CaptureContext {
  double t = 0.0;
  std::size_t pov = 0;
  double c = 0.0;
  Encounter encounter;
  CaptureResult result;
};

using CaptureHook = std::function<void(const CaptureContext&)>;

/// Plans one POV: worst-case capture search, then predictive tracking, then
/// a lane-keeping reference if both fail.
PlanResult plan_pov(const EngineConfig& c, const Snapshot& s, std::size_t pov,
                    const TemplateControl& sv_estimate, const AdmissibleSpace& sv_space,
                    const PovAssignment& assignment, const CaptureHook& hook = {});

std::vector<PlanResult> plan_tick(const EngineConfig& c, const Snapshot& s,
                                  const TemplateControl& sv_estimate,
                                  const std::vector<PovAssignment>& assignments,
                                  const CaptureHook& hook = {});

/// Constant-speed reference converging to the lane center nearest the POV
/// inside its band.
std::vector<VehicleState> lane_keep_reference(const EngineConfig& c, const VehicleState& pov,
                                              const std::pair<double, double>& band);

/// Builds the SV driver named by the config.
std::unique_ptr<SvDriver> make_driver(const EngineConfig& c,
                                      std::shared_ptr<ExternalPolicy> external = nullptr);

class Engine {
 public:
  explicit Engine(EngineConfig config, std::shared_ptr<ExternalPolicy> external = nullptr);

  /// Restarts from the initial snapshot with an empty log.
  void reset();
  /// Runs one tick. Returns the termination reason once the run has ended.
  std::optional<TerminationReason> step();
  TerminationReason run();
  /// Thread-safe; the run ends with ExternalStop at the next tick.
  void request_stop() { stop_.store(true); }

  bool finished() const { return log_.termination.has_value(); }
  long tick() const { return tick_; }
  const Snapshot& snapshot() const { return snapshot_; }
  const RunLog& log() const { return log_; }
  const EngineConfig& config() const { return config_; }
  const std::vector<ModeRecord>& mode_records() const { return records_; }
  /// Wall-clock milliseconds spent in plan_tick, one value per planned tick.
  const std::vector<double>& plan_times_ms() const { return plan_ms_; }
  std::vector<VehicleDims> dims() const;
  RunSummary summary() const;
  /// Latest planner result per POV.
  const std::vector<PlanResult>& last_plans() const { return plans_; }
  void set_capture_hook(CaptureHook hook) { hook_ = std::move(hook); }

 private:
  double time_of(long tick) const;
  std::optional<TerminationReason> check_termination();

  EngineConfig config_;
  std::shared_ptr<ExternalPolicy> external_;
  std::unique_ptr<SvDriver> driver_;
  std::vector<AnchorMpc> mpcs_;
  Snapshot snapshot_;
  std::optional<Snapshot> previous_;
  long tick_ = 0;
  long timeout_ticks_ = 0;
  std::vector<bool> captured_;
  std::vector<PlanResult> plans_;
  std::vector<ModeRecord> records_;
  std::vector<double> plan_ms_;
  RunLog log_;
  CaptureHook hook_;
  std::atomic<bool> stop_{false};
};

}  // namespace adversim
