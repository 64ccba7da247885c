#pragma once

#include <vector>

#include <Eigen/Core>

#include "adversim/qp.hpp"
#include "adversim/template_model.hpp"

namespace adversim {

/// Affine map from a stacked control sequence U = [u_0; ...; u_{N-1}] to the
/// template states s_k = free[k] + gamma[k] U for k = 0..N.
///
/// Positions are expressed relative to `origin` (x, y) to keep the planning
/// QPs well scaled; rows built from the map are shifted accordingly.
struct HorizonMap {
  int steps = 0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector4d> free;
  std::vector<Eigen::MatrixXd> gamma;

  Eigen::Index controls() const { return 2 * steps; }
  /// Template state at step k for controls u (relative positions).
  Eigen::Vector4d state(int k, const Eigen::VectorXd& u) const;
  /// Final (x, y) as e + M u.
  Eigen::Vector2d end_free() const { return free.back().head<2>(); }
  Eigen::MatrixXd end_gamma() const { return gamma.back().topRows(2); }
};

/// `s0` is the template-frame start state in world coordinates.
HorizonMap build_horizon(const Eigen::Vector4d& s0, const TemplateMatrices& m,
                         int steps, const Eigen::Vector2d& origin);

/// Stacks a controls sequence.
Eigen::VectorXd stack_controls(const std::vector<TemplateControl>& u);
std::vector<TemplateControl> unstack_controls(const Eigen::VectorXd& u);

/// Per-step action rows over U (block diagonal).
Polytope stacked_action_rows(const Polytope& action, int steps);

/// State rows for steps k = 1..N over U. Each row carries a class index
/// (static rows first, then timed rows) shared across steps; the rhs of a
/// row is raised by relax[class].
struct StateRows {
  Polytope rows;
  std::vector<int> row_class;
  int classes = 0;
};

StateRows stacked_state_rows(const AdmissibleSpace& space, const HorizonMap& map,
                             const Eigen::VectorXd& relax);

/// Per-class violation of the rows at k = 0 (zero where satisfied).
Eigen::VectorXd initial_violation(const AdmissibleSpace& space, const HorizonMap& map);

/// Per-class violation along the whole rollout under controls u.
Eigen::VectorXd rollout_violation(const AdmissibleSpace& space, const HorizonMap& map,
                                  const Eigen::VectorXd& u);

/// Pads a polytope over U with zero columns up to `cols` variables.
Polytope pad_columns(const Polytope& p, Eigen::Index cols);

struct RelaxedSolve {
  QpSolution sol;
  Eigen::VectorXd relax;
  /// The relaxation was grown beyond its input to restore feasibility.
  bool elastic = false;
};

/// Solves min 0.5 z'Hz + g'z subject to `hard` rows and `soft` rows whose
/// rhs is raised by relax[soft_class[i]]. If that is infeasible, the
/// smallest per-class raise restoring feasibility is added and the problem
/// re-solved. Throws QpFailure when no solution is found.
RelaxedSolve solve_relaxed(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                           const Polytope& hard, const Polytope& soft,
                           const std::vector<int>& soft_class, Eigen::VectorXd relax,
                           const QpOptions& options);

/// Raises the rhs of each soft row by relax[class].
Polytope raise_rows(const Polytope& soft, const std::vector<int>& soft_class,
                    const Eigen::VectorXd& relax);

}  // namespace adversim
