#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "adversim/qp.hpp"
#include "adversim/template_model.hpp"

namespace adversim {

/// Running and terminal weights of the tracking cost.
struct TrackingWeights {
  Eigen::Matrix4d q_r;
  Eigen::Matrix4d q_f;

  /// diag(1, 100, 0.1, 0.1) for both.
  static TrackingWeights paper_default();
  /// Throws adversim::Error unless both are symmetric PSD.
  void validate() const;
  bool operator==(const TrackingWeights&) const = default;
};

struct SvPrediction {
  /// Predicted template states, steps + 1 entries.
  std::vector<VehicleState> states;
  /// Control applied at each step (the held control, or zero once zeroed).
  std::vector<TemplateControl> controls;
  TemplateControl assumed_control;
};

/// Holds `last_control` (pulled into the SV action polytope) over the
/// horizon. From the first step where the held control would take the state
/// across a row it did not already violate, the control is zero. With
/// `steady_state` the control is zero throughout.
SvPrediction predict_sv(const VehicleState& sv, const TemplateControl& last_control,
                        double t_bar, const TemplateMatrices& mats,
                        const AdmissibleSpace& space, bool steady_state = false);

/// SV control estimated from two consecutive observed states:
/// a_x = dv / dt, a_y = v dphi / dt.
TemplateControl estimate_control(const VehicleState& prev, const VehicleState& curr,
                                 double dt);

struct TrackingPlan {
  std::vector<VehicleState> reference;
  std::vector<TemplateControl> controls;
  double cost = 0.0;
  QpStatus status = QpStatus::Optimal;
  bool relaxed = false;
};

/// min sum_{k<N} e_k' Q_r e_k + e_N' Q_f e_N over the POV controls, where
/// e_k is the POV template state minus the predicted SV state, subject to
/// the POV action rows at every step and state rows at k = 1..N. Throws
/// QpFailure if no plan is found.
TrackingPlan plan_tracking(const VehicleState& pov, const SvPrediction& prediction,
                           const TrackingWeights& weights, const AdmissibleSpace& space,
                           const TemplateMatrices& mats,
                           const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                           const QpOptions& qp = QpOptions::with(1e-7, 400));

}  // namespace adversim
