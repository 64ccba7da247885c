#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "adversim/predictive.hpp"
#include "adversim/qp.hpp"
#include "adversim/template_model.hpp"

namespace adversim {

class SteerOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateReference : public Error {
 public:
  using Error::Error;
};

/// The anchor model shares the template state layout.
using AnchorState = VehicleState;

/// Pedal and steering-wheel command; positive steer turns left.
struct AnchorControl {
  double a = 0.0;
  double steer = 0.0;

  bool operator==(const AnchorControl&) const = default;
};

struct BicycleParams {
  double wheelbase = 2.7;
  double steer_max = 0.6;
  double steer_rate_max = 0.8;

  /// Throws adversim::Error unless all fields are positive.
  void validate() const;
  bool operator==(const BicycleParams&) const = default;
};

/// Kinematic bicycle step: x += v cos(phi) D, y += v sin(phi) D,
/// phi += (v / L) tan(steer) D, v = max(0, v + a D).
AnchorState anchor_step(const AnchorState& s, const AnchorControl& u,
                        const BicycleParams& p, double delta);

/// Steering angle producing lateral acceleration a_y at speed v (speeds
/// below 1 m/s are treated as 1), clamped to +-steer_max.
AnchorControl template_to_anchor(const TemplateControl& u, double v, const BicycleParams& p);

/// One step of the affine model s' = A s + B u + c in [x, y, v, phi] order.
struct LinearizedStep {
  Eigen::Matrix4d a;
  Eigen::Matrix<double, 4, 2> b;
  Eigen::Vector4d c;
  AnchorControl nominal;
};

/// Jacobians of anchor_step at each reference state and the nominal control
/// that reproduces the next reference state's speed and heading change. The
/// offset c makes the reference an exact fixed point of the affine model.
/// Headings are unwrapped along the reference.
std::vector<LinearizedStep> linearize_reference(const std::vector<VehicleState>& reference,
                                                const BicycleParams& p, double delta);

struct MpcOptions {
  /// Weights on (a - a_nominal)^2 and (steer - steer_nominal)^2.
  double accel_weight = 0.1;
  double steer_weight = 10.0;
  /// Weight on consecutive steering differences.
  double steer_rate_weight = 50.0;
  QpOptions qp = QpOptions::with(1e-7, 400);
};

struct MpcResult {
  AnchorControl control;
  QpStatus status = QpStatus::Optimal;
  /// The QP failed and the hold-steer / full-brake command was returned.
  bool fallback = false;
  bool relaxed = false;
};

/// Receding-horizon tracking of a template reference with the anchor model.
/// Acceleration rows come from the a_x bounds, steering rows from the a_y
/// bounds at the reference speed of each step, |steer| <= steer_max and
/// |steer_k - steer_{k-1}| <= steer_rate_max * delta. State rows are applied
/// per step and slackened by their violation at the current state.
MpcResult mpc_track(const AnchorState& current, const std::vector<VehicleState>& reference,
                    const BicycleParams& p, const AdmissibleSpace& space,
                    const TrackingWeights& weights, double delta, double previous_steer,
                    const MpcOptions& options = {});

/// Per-vehicle MPC that remembers the previous steering command.
class AnchorMpc {
 public:
  AnchorMpc(BicycleParams params, TrackingWeights weights, double delta,
            MpcOptions options = {});

  MpcResult track(const AnchorState& current, const std::vector<VehicleState>& reference,
                  const AdmissibleSpace& space);
  void reset(double steer = 0.0) { previous_steer_ = steer; }
  double previous_steer() const { return previous_steer_; }
  const BicycleParams& params() const { return params_; }

 private:
  BicycleParams params_;
  TrackingWeights weights_;
  double delta_;
  MpcOptions options_;
  double previous_steer_ = 0.0;
};

}  // namespace adversim
