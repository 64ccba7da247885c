#include "adversim/horizon.hpp"

#include <algorithm>

namespace adversim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::Vector4d HorizonMap::state(int k, const VectorXd& u) const {
  return free.at(static_cast<std::size_t>(k)) + gamma[static_cast<std::size_t>(k)] * u;
}

HorizonMap build_horizon(const Eigen::Vector4d& s0, const TemplateMatrices& m,
                         int steps, const Eigen::Vector2d& origin) {
  if (steps < 1) throw Error("horizon needs at least one step");
  HorizonMap map;
  map.steps = steps;
  map.origin = origin;
  const Eigen::Index nu = 2 * steps;
  Eigen::Vector4d s = s0;
  s.head<2>() -= origin;
  map.free.reserve(static_cast<std::size_t>(steps) + 1);
  map.gamma.reserve(static_cast<std::size_t>(steps) + 1);
  map.free.push_back(s);
  map.gamma.push_back(MatrixXd::Zero(4, nu));
  for (int k = 0; k < steps; ++k) {
    map.free.push_back(m.a * map.free.back());
    MatrixXd g = m.a * map.gamma.back();
    g.middleCols(2 * k, 2) += m.b;
    map.gamma.push_back(std::move(g));
  }
  return map;
}

VectorXd stack_controls(const std::vector<TemplateControl>& u) {
  VectorXd out(2 * static_cast<Eigen::Index>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) {
    out(2 * static_cast<Eigen::Index>(k)) = u[k].a_x;
    out(2 * static_cast<Eigen::Index>(k) + 1) = u[k].a_y;
  }
  return out;
}

std::vector<TemplateControl> unstack_controls(const VectorXd& u) {
  std::vector<TemplateControl> out;
  out.reserve(static_cast<std::size_t>(u.size() / 2));
  for (Eigen::Index k = 0; k + 1 < u.size(); k += 2) out.push_back({u(k), u(k + 1)});
  return out;
}

Polytope stacked_action_rows(const Polytope& action, int steps) {
  const Eigen::Index r = action.rows();
  MatrixXd g = MatrixXd::Zero(r * steps, 2 * steps);
  VectorXd h(r * steps);
  for (int k = 0; k < steps; ++k) {
    g.block(r * k, 2 * k, r, 2) = action.g();
    h.segment(r * k, r) = action.h();
  }
  return Polytope(std::move(g), std::move(h));
}

namespace {

Eigen::Vector4d origin4(const HorizonMap& map) {
  return {map.origin.x(), map.origin.y(), 0.0, 0.0};
}

}  // namespace

StateRows stacked_state_rows(const AdmissibleSpace& space, const HorizonMap& map,
                             const VectorXd& relax) {
  const Eigen::Index ns = space.state.rows();
  const int classes = static_cast<int>(space.state_rows());
  if (relax.size() != classes) throw Error("relaxation vector has the wrong size");
  const Eigen::Index total = static_cast<Eigen::Index>(classes) * map.steps;
  MatrixXd g(total, map.controls());
  VectorXd h(total);
  StateRows out;
  out.classes = classes;
  out.row_class.reserve(static_cast<std::size_t>(total));
  const Eigen::Vector4d o = origin4(map);
  Eigen::Index row = 0;
  for (int k = 1; k <= map.steps; ++k) {
    const auto& free = map.free[static_cast<std::size_t>(k)];
    const auto& gam = map.gamma[static_cast<std::size_t>(k)];
    for (int c = 0; c < classes; ++c) {
      Eigen::Vector4d a;
      double rhs = 0.0;
      if (c < ns) {
        a = space.state.g().row(c).transpose();
        rhs = space.state.h()(c);
      } else {
        const auto& tr = space.timed[static_cast<std::size_t>(c - ns)];
        a = tr.g;
        rhs = tr.rhs(k);
      }
      g.row(row) = a.transpose() * gam;
      h(row) = rhs - a.dot(o) - a.dot(free) + relax(c);
      out.row_class.push_back(c);
      ++row;
    }
  }
  out.rows = Polytope(std::move(g), std::move(h));
  return out;
}

namespace {

VectorXd violation_at(const AdmissibleSpace& space, int k, const Eigen::Vector4d& world) {
  const Eigen::Index ns = space.state.rows();
  VectorXd v = VectorXd::Zero(space.state_rows());
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    double lhs = 0.0;
    double rhs = 0.0;
    if (c < ns) {
      lhs = space.state.g().row(c).dot(world);
      rhs = space.state.h()(c);
    } else {
      const auto& tr = space.timed[static_cast<std::size_t>(c - ns)];
      lhs = tr.g.dot(world);
      rhs = tr.rhs(k);
    }
    v(c) = std::max(0.0, lhs - rhs);
  }
  return v;
}

}  // namespace

VectorXd initial_violation(const AdmissibleSpace& space, const HorizonMap& map) {
  return violation_at(space, 0, map.free.front() + origin4(map));
}

VectorXd rollout_violation(const AdmissibleSpace& space, const HorizonMap& map,
                           const VectorXd& u) {
  VectorXd worst = VectorXd::Zero(space.state_rows());
  for (int k = 0; k <= map.steps; ++k) {
    worst = worst.cwiseMax(violation_at(space, k, map.state(k, u) + origin4(map)));
  }
  return worst;
}

Polytope pad_columns(const Polytope& p, Eigen::Index cols) {
  if (p.dim() > cols) throw Error("cannot pad polytope to fewer columns");
  MatrixXd g = MatrixXd::Zero(p.rows(), cols);
  g.leftCols(p.dim()) = p.g();
  return Polytope(std::move(g), p.h());
}

Polytope raise_rows(const Polytope& soft, const std::vector<int>& soft_class,
                    const VectorXd& relax) {
  VectorXd h = soft.h();
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    h(i) += relax(soft_class[static_cast<std::size_t>(i)]);
  }
  return Polytope(soft.g(), std::move(h));
}

RelaxedSolve solve_relaxed(const MatrixXd& hessian, const VectorXd& gradient,
                           const Polytope& hard, const Polytope& soft,
                           const std::vector<int>& soft_class, VectorXd relax,
                           const QpOptions& options) {
  const Eigen::Index n = gradient.size();
  RelaxedSolve out;
  auto attempt = [&](const VectorXd& r) {
    const Polytope rows = hard.intersect(raise_rows(soft, soft_class, r));
    return solve(QpProblem(hessian, gradient, rows), options);
  };
  out.sol = attempt(relax);
  if (out.sol.status != QpStatus::Infeasible) {
    out.relax = std::move(relax);
    if (out.sol.status == QpStatus::Unbounded) {
      throw QpFailure("planning QP is unbounded", out.sol.status);
    }
    return out;
  }

  // Smallest per-class raise: min sum(sigma) over (z, sigma).
  const Eigen::Index nc = relax.size();
  const Eigen::Index m_hard = hard.rows();
  const Eigen::Index m_soft = soft.rows();
  MatrixXd g = MatrixXd::Zero(m_hard + m_soft + nc, n + nc);
  VectorXd h(m_hard + m_soft + nc);
  if (m_hard > 0) {
    g.topLeftCorner(m_hard, n) = hard.g();
    h.head(m_hard) = hard.h();
  }
  const Polytope raised = raise_rows(soft, soft_class, relax);
  for (Eigen::Index i = 0; i < m_soft; ++i) {
    g.row(m_hard + i).head(n) = soft.g().row(i);
    g(m_hard + i, n + soft_class[static_cast<std::size_t>(i)]) = -1.0;
    h(m_hard + i) = raised.h()(i);
  }
  for (Eigen::Index c = 0; c < nc; ++c) {
    g(m_hard + m_soft + c, n + c) = -1.0;
    h(m_hard + m_soft + c) = 0.0;
  }
  MatrixXd he = MatrixXd::Zero(n + nc, n + nc);
  he.bottomRightCorner(nc, nc) = 1e-6 * MatrixXd::Identity(nc, nc);
  VectorXd ge = VectorXd::Zero(n + nc);
  ge.tail(nc).setOnes();
  QpOptions eopt;
  eopt.tol = options.tol;
  eopt.max_iter = std::max(options.max_iter, 4 * static_cast<int>(n + nc + g.rows()));
  const QpSolution es = solve(QpProblem(he, ge, Polytope(g, h)), eopt);
  if (es.status == QpStatus::Infeasible || es.status == QpStatus::Unbounded) {
    throw QpFailure("planning QP is infeasible even with relaxed state rows",
                    QpStatus::Infeasible);
  }
  relax += es.x.tail(nc).cwiseMax(0.0) + VectorXd::Constant(nc, 1e-7);
  out.elastic = true;
  out.sol = attempt(relax);
  out.relax = std::move(relax);
  if (out.sol.status == QpStatus::Infeasible || out.sol.status == QpStatus::Unbounded) {
    throw QpFailure("planning QP is infeasible after relaxation", out.sol.status);
  }
  return out;
}

}  // namespace adversim
