#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace adversim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Template state of one vehicle: position, speed and heading (0 = +x).
///
/// The heading is normalized into (-pi, pi] on construction. Speed is not
/// clamped here; `validate()` enforces the v >= 0 invariant at the places
/// where states enter the simulation.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double phi = 0.0;

  VehicleState() = default;
  VehicleState(double x_, double y_, double v_, double phi_);

  /// [x, y, v, phi]
  Eigen::Vector4d vec() const { return {x, y, v, phi}; }
  static VehicleState from_vec(const Eigen::Vector4d& s) {
    return {s[0], s[1], s[2], s[3]};
  }

  /// Throws adversim::Error unless all fields are finite and v >= 0.
  void validate() const;

  bool operator==(const VehicleState&) const = default;
};

struct VehicleDims {
  double length = 5.0;
  double width = 2.0;

  VehicleDims() = default;
  VehicleDims(double length_, double width_);

  double diagonal() const;
  bool operator==(const VehicleDims&) const = default;
};

/// Combined state of the subject vehicle and k >= 1 POVs at time t.
struct Snapshot {
  VehicleState sv;
  std::vector<VehicleState> povs;
  double t = 0.0;

  std::size_t pov_count() const { return povs.size(); }
  /// Throws adversim::Error when k == 0 or a state is invalid.
  void validate() const;
};

/// Linear constraint set {z : g z <= h}.
class Polytope {
 public:
  static constexpr double kContainsSlack = 1e-9;

  Polytope() = default;
  Polytope(Eigen::MatrixXd g, Eigen::VectorXd h);
  /// An unconstrained set in `dim` dimensions (zero rows).
  static Polytope unconstrained(Eigen::Index dim);

  const Eigen::MatrixXd& g() const { return g_; }
  const Eigen::VectorXd& h() const { return h_; }
  Eigen::Index rows() const { return g_.rows(); }
  Eigen::Index dim() const { return g_.cols(); }

  bool contains(const Eigen::VectorXd& z, double slack = kContainsSlack) const;
  /// Largest row violation max_i (g_i z - h_i), or -inf with zero rows.
  double max_violation(const Eigen::VectorXd& z) const;

  /// Rows of both polytopes stacked; dimensions must agree.
  Polytope intersect(const Polytope& other) const;
  /// Appends a single row a^T z <= b.
  Polytope with_row(const Eigen::VectorXd& a, double b) const;

 private:
  Eigen::MatrixXd g_;
  Eigen::VectorXd h_;
};

/// Why a run stopped.
struct TerminationReason {
  enum class Kind { Collision, Timeout, CaptureOnly, ExternalStop };

  Kind kind = Kind::Timeout;
  /// POV index for Collision and CaptureOnly.
  std::optional<std::size_t> pov;
  double t = 0.0;

  static TerminationReason collision(std::size_t pov, double t);
  static TerminationReason timeout(double t);
  static TerminationReason capture_only(std::size_t pov, double t);
  static TerminationReason external_stop(double t);

  std::string name() const;
  bool operator==(const TerminationReason&) const = default;
};

/// Entry j is true iff the SV-POV_j center distance is strictly below c.
std::vector<bool> capture_check(const Snapshot& snapshot, double c);

/// Membership of the acceptable set with respect to POV j (distance >= c).
bool in_safe_set(const Snapshot& snapshot, std::size_t pov, double c);

struct PovDistance {
  double distance = 0.0;
  std::size_t pov = 0;
};

/// Smallest SV-POV center distance; ties go to the lowest index.
PovDistance min_pov_distance(const Snapshot& snapshot);

/// Separating-axis overlap test for two heading-oriented rectangles.
/// Touching boundaries count as a collision.
bool rect_collision(const VehicleState& a, const VehicleDims& da,
                    const VehicleState& b, const VehicleDims& db);

/// Euclidean distance between two oriented rectangles; 0 when they overlap.
double rect_distance(const VehicleState& a, const VehicleDims& da,
                     const VehicleState& b, const VehicleDims& db);

}  // namespace adversim
