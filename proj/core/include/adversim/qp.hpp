#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adversim/scenario.hpp"

namespace adversim {

/// Linear equality rows a z = b.
struct EqualityRows {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// min 0.5 x'Hx + g'x  s.t.  G x <= h,  A x = b.
///
/// The Hessian is symmetrized on construction. If its smallest eigenvalue is
/// below -1e-8 it is shifted by rho I with rho = |lambda_min| + 1e-8 and the
/// shift is kept in `regularization()`.
class QpProblem {
 public:
  QpProblem(Eigen::MatrixXd hessian, Eigen::VectorXd gradient, Polytope ineq,
            std::optional<EqualityRows> eq = std::nullopt);

  const Eigen::MatrixXd& hessian() const { return hessian_; }
  const Eigen::VectorXd& gradient() const { return gradient_; }
  const Polytope& ineq() const { return ineq_; }
  const std::optional<EqualityRows>& eq() const { return eq_; }
  Eigen::Index dim() const { return gradient_.size(); }
  double regularization() const { return regularization_; }

  double objective(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd hessian_;
  Eigen::VectorXd gradient_;
  Polytope ineq_;
  std::optional<EqualityRows> eq_;
  double regularization_ = 0.0;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible, Unbounded };

std::string to_string(QpStatus s);

/// Raised by planners when a QP they depend on cannot be solved.
class QpFailure : public Error {
 public:
  QpFailure(const std::string& what, QpStatus status) : Error(what), status_(status) {}
  QpStatus status() const { return status_; }

 private:
  QpStatus status_;
};

struct QpSolution {
  Eigen::VectorXd x;
  /// Inequality multipliers. For Infeasible this holds the Farkas vector y >= 0
  /// with G'y + A'nu = 0 and h'y + b'nu < 0.
  Eigen::VectorXd dual_ineq;
  Eigen::VectorXd dual_eq;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  double regularization = 0.0;
  /// Inequality rows in the final working set, ascending.
  std::vector<int> active;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Warm start point; used directly when feasible, otherwise as the
  /// phase-1 starting guess.
  std::optional<Eigen::VectorXd> x0;
  /// Warm start working set (inequality row indices). Rows not active at
  /// the starting point are ignored.
  std::vector<int> active;

  static QpOptions with(double tol, int max_iter) {
    QpOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
  }
};

/// Primal active-set solve. Deterministic: the same problem and options give
/// bit-identical results.
QpSolution solve(const QpProblem& p, const QpOptions& options = {});

/// Max of stationarity, primal violation, dual negativity and
/// complementarity violation at (x, lambda, nu).
double kkt_residual(const QpProblem& p, const QpSolution& sol);

}  // namespace adversim
