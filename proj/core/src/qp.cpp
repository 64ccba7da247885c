#include "adversim/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

namespace adversim {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rows {
  const MatrixXd& g;
  const VectorXd& h;
  const MatrixXd& a;
  const VectorXd& b;
};

struct CoreResult {
  VectorXd x;
  VectorXd mu;  // multipliers of [A; G_work] in that order
  std::vector<int> work;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
};

MatrixXd working_transpose(const Rows& r, const std::vector<int>& work) {
  const Eigen::Index n = r.g.cols() > 0 ? r.g.cols() : r.a.cols();
  MatrixXd wt(n, r.a.rows() + static_cast<Eigen::Index>(work.size()));
  if (r.a.rows() > 0) wt.leftCols(r.a.rows()) = r.a.transpose();
  for (std::size_t j = 0; j < work.size(); ++j) {
    wt.col(r.a.rows() + static_cast<Eigen::Index>(j)) = r.g.row(work[j]).transpose();
  }
  return wt;
}

// Search direction in the null space of the working rows. Sets `ray` when the
// direction has zero curvature and must be followed until a row blocks it.
VectorXd null_space_step(const MatrixXd& hess, const VectorXd& grad,
                         const MatrixXd& z, bool& ray) {
  ray = false;
  const VectorXd gz = z.transpose() * grad;
  if (gz.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + grad.lpNorm<Eigen::Infinity>())) {
    return VectorXd::Zero(grad.size());
  }
  const MatrixXd hz = z.transpose() * hess * z;
  Eigen::LLT<MatrixXd> llt(hz);
  if (llt.info() == Eigen::Success) {
    const VectorXd d = llt.matrixLLT().diagonal();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    if (dmax > 0.0 && dmin * dmin > 1e-12 * dmax * dmax) {
      return -(z * llt.solve(gz));
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(hz);
  const VectorXd& lam = es.eigenvalues();
  const MatrixXd& v = es.eigenvectors();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  VectorXd null_part = VectorXd::Zero(gz.size());
  VectorXd newton = VectorXd::Zero(gz.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double c = v.col(i).dot(gz);
    if (lam(i) <= 1e-12 * scale) {
      null_part -= c * v.col(i);
    } else {
      newton -= (c / lam(i)) * v.col(i);
    }
  }
  if (null_part.norm() > 1e-12 * gz.norm()) {
    ray = true;
    return z * null_part;
  }
  return z * newton;
}

CoreResult active_set(const MatrixXd& hess, const VectorXd& grad0, const Rows& r,
                      VectorXd x, std::vector<int> work, double tol, int max_iter) {
  const Eigen::Index n = x.size();
  const Eigen::Index na = r.a.rows();
  const Eigen::Index m = r.g.rows();
  const double mult_tol = std::min(1e-10, 0.01 * tol);
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);
  for (int i : work) in_work[static_cast<std::size_t>(i)] = 1;

  CoreResult out;
  bool at_min = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    const MatrixXd wt = working_transpose(r, work);
    const Eigen::Index w = wt.cols();
    const VectorXd grad = hess * x + grad0;
    Eigen::ColPivHouseholderQR<MatrixXd> qr;
    Eigen::Index rank = 0;
    if (w > 0) {
      qr.compute(wt);
      rank = qr.rank();
    }

    VectorXd p = VectorXd::Zero(n);
    bool ray = false;
    if (!at_min && rank < n) {
      MatrixXd z;
      if (w > 0) {
        const MatrixXd q = qr.householderQ();
        z = q.rightCols(n - rank);
      } else {
        z = MatrixXd::Identity(n, n);
      }
      p = null_space_step(hess, grad, z, ray);
    }

    if (at_min || p.lpNorm<Eigen::Infinity>() <=
                      1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      VectorXd mu = w > 0 ? VectorXd(qr.solve(-grad)) : VectorXd();
      int drop = -1;
      double worst = -mult_tol;
      for (std::size_t j = 0; j < work.size(); ++j) {
        const double val = mu(na + static_cast<Eigen::Index>(j));
        if (val < worst || (val == worst && drop >= 0 && work[j] < work[static_cast<std::size_t>(drop)])) {
          worst = val;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        out.status = QpStatus::Optimal;
        out.mu = std::move(mu);
        break;
      }
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = 0;
      work.erase(work.begin() + drop);
      at_min = false;
      continue;
    }

    double alpha = ray ? kInf : 1.0;
    int block = -1;
    const double pn = p.lpNorm<Eigen::Infinity>();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_work[static_cast<std::size_t>(i)]) continue;
      const double gp = r.g.row(i).dot(p);
      if (gp <= 1e-13 * pn * std::max(1.0, r.g.row(i).lpNorm<Eigen::Infinity>())) continue;
      const double ratio = std::max(0.0, (r.h(i) - r.g.row(i).dot(x)) / gp);
      if (ratio < alpha) {
        alpha = ratio;
        block = static_cast<int>(i);
      }
    }
    if (block < 0 && ray) {
      out.status = QpStatus::Unbounded;
      break;
    }
    x += alpha * p;
    if (block >= 0) {
      work.push_back(block);
      in_work[static_cast<std::size_t>(block)] = 1;
      at_min = false;
    } else {
      at_min = true;
    }
  }
  if (out.status == QpStatus::MaxIterations) {
    const MatrixXd wt = working_transpose(r, work);
    const VectorXd grad = hess * x + grad0;
    out.mu = wt.cols() > 0 ? VectorXd(wt.colPivHouseholderQr().solve(-grad))
                           : VectorXd();
  }
  out.x = std::move(x);
  out.work = std::move(work);
  return out;
}

bool independent_of(const MatrixXd& wt, const VectorXd& row) {
  if (wt.cols() == 0) return row.norm() > 0.0;
  MatrixXd ext(wt.rows(), wt.cols() + 1);
  ext << wt, row;
  return Eigen::ColPivHouseholderQR<MatrixXd>(ext).rank() > wt.cols();
}

void scatter_duals(const CoreResult& core, Eigen::Index na, Eigen::Index m,
                   QpSolution& sol) {
  sol.dual_eq = na > 0 ? VectorXd(core.mu.head(na)) : VectorXd(0);
  sol.dual_ineq = VectorXd::Zero(m);
  for (std::size_t j = 0; j < core.work.size(); ++j) {
    sol.dual_ineq(core.work[j]) =
        std::max(0.0, core.mu(na + static_cast<Eigen::Index>(j)));
  }
  sol.active = core.work;
  std::sort(sol.active.begin(), sol.active.end());
}

}  // namespace

QpProblem::QpProblem(MatrixXd hessian, VectorXd gradient, Polytope ineq,
                     std::optional<EqualityRows> eq)
    : hessian_(std::move(hessian)),
      gradient_(std::move(gradient)),
      ineq_(std::move(ineq)),
      eq_(std::move(eq)) {
  const Eigen::Index n = gradient_.size();
  if (hessian_.rows() != n || hessian_.cols() != n) {
    throw Error("QP hessian must be n x n with n = gradient length");
  }
  if (ineq_.rows() > 0 && ineq_.dim() != n) {
    throw Error("QP inequality rows have the wrong width");
  }
  if (eq_) {
    if (eq_->a.rows() != eq_->b.size() || (eq_->a.rows() > 0 && eq_->a.cols() != n)) {
      throw Error("QP equality rows are malformed");
    }
  }
  if (!hessian_.allFinite() || !gradient_.allFinite()) {
    throw Error("QP data must be finite");
  }
  hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(hessian_, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-8) {
      regularization_ = std::abs(lmin) + 1e-8;
      hessian_ += regularization_ * MatrixXd::Identity(n, n);
    }
  }
}

double QpProblem::objective(const VectorXd& x) const {
  return 0.5 * x.dot(hessian_ * x) + gradient_.dot(x);
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal:
      return "optimal";
    case QpStatus::MaxIterations:
      return "max_iterations";
    case QpStatus::Infeasible:
      return "infeasible";
    case QpStatus::Unbounded:
      return "unbounded";
  }
  return "unknown";
}

QpSolution solve(const QpProblem& p, const QpOptions& options) {
  if (!(options.tol > 0.0)) throw Error("QP tolerance must be positive");
  const Eigen::Index n = p.dim();
  const MatrixXd empty_a(0, n);
  const VectorXd empty_b(0);
  const MatrixXd& a = p.eq() ? p.eq()->a : empty_a;
  const VectorXd& b = p.eq() ? p.eq()->b : empty_b;
  const MatrixXd g = p.ineq().rows() > 0 ? p.ineq().g() : MatrixXd(0, n);
  const VectorXd& h = p.ineq().h();
  const Eigen::Index m = g.rows();
  const Eigen::Index na = a.rows();
  const double tol = options.tol;

  QpSolution sol;
  sol.regularization = p.regularization();
  sol.dual_ineq = VectorXd::Zero(m);
  sol.dual_eq = VectorXd::Zero(na);

  VectorXd x = options.x0 && options.x0->size() == n ? *options.x0 : VectorXd::Zero(n);
  if (na > 0) {
    const VectorXd res = b - a * x;
    x += a.colPivHouseholderQr().solve(res);
    const VectorXd left = b - a * x;
    if (left.lpNorm<Eigen::Infinity>() > tol) {
      sol.status = QpStatus::Infeasible;
      sol.x = x;
      sol.dual_eq = -left;
      return sol;
    }
  }

  int phase1_iters = 0;
  const double viol = m > 0 ? (g * x - h).maxCoeff() : -kInf;
  if (viol > tol) {
    // Phase 1: min t  s.t.  G x - t <= h,  t >= 0,  A x = b.
    MatrixXd g1 = MatrixXd::Zero(m + 1, n + 1);
    g1.topLeftCorner(m, n) = g;
    g1.col(n).head(m).setConstant(-1.0);
    g1(m, n) = -1.0;
    VectorXd h1(m + 1);
    h1 << h, 0.0;
    MatrixXd a1 = MatrixXd::Zero(na, n + 1);
    if (na > 0) a1.leftCols(n) = a;
    VectorXd grad1 = VectorXd::Zero(n + 1);
    grad1(n) = 1.0;
    VectorXd z(n + 1);
    z << x, viol;
    const MatrixXd h0 = MatrixXd::Zero(n + 1, n + 1);
    const Rows rows1{g1, h1, a1, b};
    const int budget = std::max(options.max_iter, static_cast<int>(4 * (n + m)));
    CoreResult ph1 = active_set(h0, grad1, rows1, z, {}, tol, budget);
    phase1_iters = ph1.iterations;
    if (ph1.status != QpStatus::Optimal) {
      sol.status = QpStatus::MaxIterations;
      sol.x = ph1.x.head(n);
      sol.iterations = phase1_iters;
      sol.objective = p.objective(sol.x);
      sol.kkt_residual = kkt_residual(p, sol);
      return sol;
    }
    const double t_star = ph1.x(n);
    if (t_star > tol) {
      sol.status = QpStatus::Infeasible;
      sol.x = ph1.x.head(n);
      sol.iterations = phase1_iters;
      sol.dual_ineq = VectorXd::Zero(m);
      for (std::size_t j = 0; j < ph1.work.size(); ++j) {
        if (ph1.work[j] < m) {
          sol.dual_ineq(ph1.work[j]) =
              std::max(0.0, ph1.mu(na + static_cast<Eigen::Index>(j)));
        }
      }
      sol.dual_eq = na > 0 ? VectorXd(ph1.mu.head(na)) : VectorXd(0);
      sol.objective = p.objective(sol.x);
      return sol;
    }
    x = ph1.x.head(n);
  }

  // Seed the working set from the warm start, keeping independent active rows.
  std::vector<int> work;
  if (!options.active.empty() && m > 0) {
    const Rows probe{g, h, a, b};
    for (int i : options.active) {
      if (i < 0 || i >= m) continue;
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      if (std::abs(g.row(i).dot(x) - h(i)) > tol) continue;
      if (!independent_of(working_transpose(probe, work), g.row(i).transpose())) continue;
      work.push_back(i);
    }
  }

  const Rows rows{g, h, a, b};
  CoreResult core = active_set(p.hessian(), p.gradient(), rows, x, work, tol,
                               options.max_iter);
  sol.x = core.x;
  sol.status = core.status;
  sol.iterations = phase1_iters + core.iterations;
  scatter_duals(core, na, m, sol);
  sol.kkt_residual = kkt_residual(p, sol);

  if (sol.status == QpStatus::Optimal && sol.kkt_residual > tol) {
    // Polish with a direct solve of the KKT system on the final working set.
    const MatrixXd wt = working_transpose(rows, core.work);
    const Eigen::Index w = wt.cols();
    MatrixXd kkt = MatrixXd::Zero(n + w, n + w);
    kkt.topLeftCorner(n, n) = p.hessian();
    kkt.topRightCorner(n, w) = wt;
    kkt.bottomLeftCorner(w, n) = wt.transpose();
    VectorXd rhs(n + w);
    rhs.head(n) = -p.gradient();
    if (na > 0) rhs.segment(n, na) = b;
    for (std::size_t j = 0; j < core.work.size(); ++j) {
      rhs(n + na + static_cast<Eigen::Index>(j)) = h(core.work[j]);
    }
    const VectorXd kx = kkt.fullPivLu().solve(rhs);
    if (kx.allFinite()) {
      CoreResult polished = core;
      polished.x = kx.head(n);
      polished.mu = kx.tail(w);
      QpSolution cand = sol;
      cand.x = polished.x;
      scatter_duals(polished, na, m, cand);
      cand.kkt_residual = kkt_residual(p, cand);
      if (cand.kkt_residual < sol.kkt_residual) sol = std::move(cand);
    }
    if (sol.kkt_residual > tol) sol.status = QpStatus::MaxIterations;
  }
  sol.objective = p.objective(sol.x);
  return sol;
}

double kkt_residual(const QpProblem& p, const QpSolution& sol) {
  const Eigen::Index n = p.dim();
  if (sol.x.size() != n) throw Error("QP solution has the wrong dimension");
  VectorXd station = p.hessian() * sol.x + p.gradient();
  double res = 0.0;
  const Polytope& in = p.ineq();
  if (in.rows() > 0) {
    if (sol.dual_ineq.size() != in.rows()) throw Error("QP dual has the wrong size");
    station += in.g().transpose() * sol.dual_ineq;
    const VectorXd slack = in.g() * sol.x - in.h();
    res = std::max(res, slack.maxCoeff());
    res = std::max(res, (-sol.dual_ineq).maxCoeff());
    res = std::max(res, sol.dual_ineq.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  if (p.eq() && p.eq()->a.rows() > 0) {
    if (sol.dual_eq.size() != p.eq()->a.rows()) throw Error("QP dual has the wrong size");
    station += p.eq()->a.transpose() * sol.dual_eq;
    res = std::max(res, (p.eq()->a * sol.x - p.eq()->b).lpNorm<Eigen::Infinity>());
  }
  if (n > 0) res = std::max(res, station.lpNorm<Eigen::Infinity>());
  return res;
}

}  // namespace adversim
