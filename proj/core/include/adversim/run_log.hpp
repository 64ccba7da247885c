#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adversim/anchor_mpc.hpp"
#include "adversim/scenario.hpp"

namespace adversim {

/// One tick of a run. Vectors indexed by vehicle put the SV first.
struct LogEntry {
  double t = 0.0;
  Snapshot snapshot;
  /// Anchor command applied from this snapshot; absent on the terminal entry.
  std::vector<std::optional<AnchorControl>> controls;
  /// Planner mode per POV ("worst_case", "predictive", "lane_keep", "fallback").
  std::vector<std::string> modes;
  std::vector<std::optional<double>> t_star;

  bool operator==(const LogEntry& o) const;
};

struct RunLog {
  std::vector<std::string> ids;
  std::vector<LogEntry> entries;
  std::optional<TerminationReason> termination;
  std::string config_digest;

  /// One JSON object per tick followed by a {"termination": ...} line.
  std::string to_jsonl() const;
  /// Long format: id,t,x,y,v,phi,a,steer.
  std::string to_csv() const;
  /// Inverse of to_jsonl. Throws adversim::Error on malformed input.
  static RunLog from_jsonl(const std::string& text);
};

nlohmann::json entry_to_json(const LogEntry& e, const std::vector<std::string>& ids);

struct CaptureEvent {
  std::size_t pov = 0;
  double t = 0.0;

  bool operator==(const CaptureEvent&) const = default;
};

struct TStarSample {
  double t = 0.0;
  std::size_t pov = 0;
  double t_star = 0.0;

  bool operator==(const TStarSample&) const = default;
};

struct RunSummary {
  std::string termination;
  std::optional<std::string> termination_pov;
  double termination_t = 0.0;
  std::optional<double> collision_time;
  /// Smallest SV-POV center distance over the run and where it occurred.
  double min_distance = 0.0;
  double min_distance_t = 0.0;
  std::vector<int> mode_transitions;
  std::vector<TStarSample> t_star_series;
  std::optional<double> first_engagement;
  /// Onsets of l2 capture (distance < c) per POV.
  std::vector<CaptureEvent> capture_events;
  /// Smallest POV-POV rectangle distance; absent with a single POV.
  std::optional<double> min_pov_pov_distance;
  std::vector<std::string> pov_ids;

  nlohmann::json to_json() const;
  bool operator==(const RunSummary&) const = default;
};

/// `dims` lists the SV followed by each POV.
RunSummary summarize(const RunLog& log, const std::vector<VehicleDims>& dims, double c);

struct BatchRun {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<RunSummary> summary;
  std::string error;
};

struct BatchSummary {
  int runs = 0;
  int failures = 0;
  int collisions = 0;
  double collision_rate = 0.0;
  double mean_min_distance = 0.0;
  std::optional<double> mean_first_engagement;
  std::vector<BatchRun> items;

  nlohmann::json to_json() const;
};

BatchSummary aggregate(std::vector<BatchRun> runs);

}  // namespace adversim
