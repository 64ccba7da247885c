#include "adversim/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace adversim {

double wrap_angle(double angle) {
  if (!std::isfinite(angle)) return angle;
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  a -= kPi;
  // fmod maps +pi to -pi; the interval is closed at +pi.
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

VehicleState::VehicleState(double x_, double y_, double v_, double phi_)
    : x(x_), y(y_), v(v_), phi(wrap_angle(phi_)) {}

void VehicleState::validate() const {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(v) ||
      !std::isfinite(phi)) {
    throw Error("vehicle state has non-finite components");
  }
  if (v < 0.0) throw Error("vehicle speed must be non-negative");
}

VehicleDims::VehicleDims(double length_, double width_)
    : length(length_), width(width_) {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw Error("vehicle dimensions must be positive");
  }
}

double VehicleDims::diagonal() const { return std::hypot(length, width); }

void Snapshot::validate() const {
  if (povs.empty()) throw Error("snapshot needs at least one POV");
  sv.validate();
  for (const auto& p : povs) p.validate();
}

Polytope::Polytope(Eigen::MatrixXd g, Eigen::VectorXd h)
    : g_(std::move(g)), h_(std::move(h)) {
  if (g_.rows() != h_.size()) {
    throw Error("polytope row count of g must equal length of h");
  }
}

Polytope Polytope::unconstrained(Eigen::Index dim) {
  return Polytope(Eigen::MatrixXd(0, dim), Eigen::VectorXd(0));
}

bool Polytope::contains(const Eigen::VectorXd& z, double slack) const {
  if (rows() == 0) return true;
  return ((g_ * z - h_).array() <= slack).all();
}

double Polytope::max_violation(const Eigen::VectorXd& z) const {
  if (rows() == 0) return -std::numeric_limits<double>::infinity();
  return (g_ * z - h_).maxCoeff();
}

Polytope Polytope::intersect(const Polytope& other) const {
  if (rows() == 0) return other;
  if (other.rows() == 0) return *this;
  if (dim() != other.dim()) throw Error("polytope dimension mismatch");
  Eigen::MatrixXd g(rows() + other.rows(), dim());
  g << g_, other.g_;
  Eigen::VectorXd h(rows() + other.rows());
  h << h_, other.h_;
  return Polytope(std::move(g), std::move(h));
}

Polytope Polytope::with_row(const Eigen::VectorXd& a, double b) const {
  Eigen::MatrixXd row = a.transpose();
  Eigen::VectorXd rhs(1);
  rhs << b;
  return intersect(Polytope(std::move(row), std::move(rhs)));
}

TerminationReason TerminationReason::collision(std::size_t pov, double t) {
  return {Kind::Collision, pov, t};
}
TerminationReason TerminationReason::timeout(double t) {
  return {Kind::Timeout, std::nullopt, t};
}
TerminationReason TerminationReason::capture_only(std::size_t pov, double t) {
  return {Kind::CaptureOnly, pov, t};
}
TerminationReason TerminationReason::external_stop(double t) {
  return {Kind::ExternalStop, std::nullopt, t};
}

std::string TerminationReason::name() const {
  switch (kind) {
    case Kind::Collision:
      return "collision";
    case Kind::Timeout:
      return "timeout";
    case Kind::CaptureOnly:
      return "capture_only";
    case Kind::ExternalStop:
      return "external_stop";
  }
  return "unknown";
}

namespace {

double center_distance(const VehicleState& a, const VehicleState& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

using Corners = std::array<Eigen::Vector2d, 4>;

Corners corners(const VehicleState& s, const VehicleDims& d) {
  const Eigen::Vector2d c(s.x, s.y);
  const Eigen::Vector2d fwd(std::cos(s.phi), std::sin(s.phi));
  const Eigen::Vector2d left(-fwd.y(), fwd.x());
  const Eigen::Vector2d hl = 0.5 * d.length * fwd;
  const Eigen::Vector2d hw = 0.5 * d.width * left;
  return {c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw};
}

bool separated_on(const Eigen::Vector2d& axis, const Corners& a,
                  const Corners& b) {
  constexpr double kTouch = 1e-9;
  double amin = std::numeric_limits<double>::infinity();
  double amax = -amin;
  double bmin = amin;
  double bmax = -amin;
  for (const auto& p : a) {
    const double d = axis.dot(p);
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  for (const auto& p : b) {
    const double d = axis.dot(p);
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return amax < bmin - kTouch || bmax < amin - kTouch;
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

}  // namespace

std::vector<bool> capture_check(const Snapshot& snapshot, double c) {
  std::vector<bool> out;
  out.reserve(snapshot.povs.size());
  for (const auto& pov : snapshot.povs) {
    out.push_back(center_distance(snapshot.sv, pov) < c);
  }
  return out;
}

bool in_safe_set(const Snapshot& snapshot, std::size_t pov, double c) {
  return center_distance(snapshot.sv, snapshot.povs.at(pov)) >= c;
}

PovDistance min_pov_distance(const Snapshot& snapshot) {
  PovDistance best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t j = 0; j < snapshot.povs.size(); ++j) {
    const double d = center_distance(snapshot.sv, snapshot.povs[j]);
    if (d < best.distance) best = {d, j};
  }
  return best;
}

bool rect_collision(const VehicleState& a, const VehicleDims& da,
                    const VehicleState& b, const VehicleDims& db) {
  // Cheap reject on circumscribed circles.
  if (center_distance(a, b) > 0.5 * (da.diagonal() + db.diagonal()) + 1e-9) {
    return false;
  }
  const Corners ca = corners(a, da);
  const Corners cb = corners(b, db);
  const std::array<Eigen::Vector2d, 4> axes = {
      Eigen::Vector2d(std::cos(a.phi), std::sin(a.phi)),
      Eigen::Vector2d(-std::sin(a.phi), std::cos(a.phi)),
      Eigen::Vector2d(std::cos(b.phi), std::sin(b.phi)),
      Eigen::Vector2d(-std::sin(b.phi), std::cos(b.phi)),
  };
  for (const auto& axis : axes) {
    if (separated_on(axis, ca, cb)) return false;
  }
  return true;
}

double rect_distance(const VehicleState& a, const VehicleDims& da,
                     const VehicleState& b, const VehicleDims& db) {
  if (rect_collision(a, da, b, db)) return 0.0;
  const Corners ca = corners(a, da);
  const Corners cb = corners(b, db);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace adversim
