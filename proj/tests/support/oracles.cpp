#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

namespace adversim::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::optional<BruteForceQp> brute_force_qp(const MatrixXd& h, const VectorXd& g,
                                           const MatrixXd& gi, const VectorXd& hi,
                                           const MatrixXd& ae, const VectorXd& be) {
  const Eigen::Index n = g.size();
  const Eigen::Index m = gi.rows();
  const Eigen::Index meq = ae.rows();
  std::optional<BruteForceQp> best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const Eigen::Index k = static_cast<Eigen::Index>(act.size()) + meq;
    if (k > n) continue;
    MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
    VectorXd rhs = VectorXd::Zero(n + k);
    kkt.topLeftCorner(n, n) = h;
    rhs.head(n) = -g;
    for (Eigen::Index r = 0; r < meq; ++r) {
      kkt.block(n + r, 0, 1, n) = ae.row(r);
      kkt.block(0, n + r, n, 1) = ae.row(r).transpose();
      rhs(n + r) = be(r);
    }
    for (std::size_t r = 0; r < act.size(); ++r) {
      const Eigen::Index row = n + meq + static_cast<Eigen::Index>(r);
      kkt.block(row, 0, 1, n) = gi.row(act[r]);
      kkt.block(0, row, n, 1) = gi.row(act[r]).transpose();
      rhs(row) = hi(act[r]);
    }
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd x = sol.head(n);
    if (m > 0 && ((gi * x - hi).array() > 1e-9).any()) continue;
    if (act.size() > 0 && (sol.tail(static_cast<Eigen::Index>(act.size())).array() < -1e-9).any()) {
      continue;
    }
    const double obj = 0.5 * x.dot(h * x) + g.dot(x);
    if (!best || obj < best->objective) best = BruteForceQp{x, obj};
  }
  return best;
}

RandomQp random_qp(std::mt19937_64& rng, int n, int m, int meq) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> slack(0.1, 2.0);
  auto randn = [&](int r, int c) {
    MatrixXd a(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) a(i, j) = normal(rng);
    }
    return a;
  };
  RandomQp q;
  const MatrixXd l = randn(n, n);
  q.h = l * l.transpose() + 0.1 * MatrixXd::Identity(n, n);
  q.g = 3.0 * randn(n, 1);
  const VectorXd interior = randn(n, 1);
  q.gi = randn(m, n);
  q.hi = q.gi * interior;
  for (int i = 0; i < m; ++i) q.hi(i) += slack(rng);
  q.ae = randn(meq, n);
  q.be = q.ae * interior;
  return q;
}

std::vector<std::vector<TemplateControl>> grid_sequences(const ActionBounds& box, int levels,
                                                         int steps) {
  std::vector<TemplateControl> single;
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double fx = static_cast<double>(i) / (levels - 1);
      const double fy = static_cast<double>(j) / (levels - 1);
      single.push_back({box.ax_min + fx * (box.ax_max - box.ax_min),
                        box.ay_min + fy * (box.ay_max - box.ay_min)});
    }
  }
  std::vector<std::vector<TemplateControl>> seqs{{}};
  for (int k = 0; k < steps; ++k) {
    std::vector<std::vector<TemplateControl>> next;
    for (const auto& s : seqs) {
      for (const auto& u : single) {
        auto t = s;
        t.push_back(u);
        next.push_back(std::move(t));
      }
    }
    seqs = std::move(next);
  }
  return seqs;
}

namespace {

Eigen::Vector2d end_point(const VehicleState& s0, const std::vector<TemplateControl>& u,
                          const TemplateMatrices& m) {
  const VehicleState e = rollout(s0, u, m).back();
  return {e.x, e.y};
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

std::vector<Eigen::Vector2d> hull(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (p.size() < 3) return p;
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], q) <= 0) --k;
    h[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace

double grid_minimax(const Encounter& enc, int steps, int levels) {
  std::vector<Eigen::Vector2d> sv_ends;
  for (const auto& u : grid_sequences(enc.sv_space.bounds, levels, steps)) {
    sv_ends.push_back(end_point(enc.sv, u, enc.sv_mats));
  }
  const std::vector<Eigen::Vector2d> sv_hull = hull(std::move(sv_ends));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& u : grid_sequences(enc.pov_space.bounds, levels, steps)) {
    const Eigen::Vector2d p = end_point(enc.pov, u, enc.pov_mats);
    double worst = 0.0;
    for (const auto& q : sv_hull) worst = std::max(worst, (p - q).squaredNorm());
    best = std::min(best, worst);
  }
  return best;
}

double worst_sv_response(const Encounter& enc, int steps, const Eigen::Vector2d& pov_end) {
  double worst = 0.0;
  for (const auto& u : grid_sequences(enc.sv_space.bounds, 2, steps)) {
    worst = std::max(worst, (end_point(enc.sv, u, enc.sv_mats) - pov_end).squaredNorm());
  }
  return worst;
}

std::optional<std::vector<TemplateControl>> admissible_sv_draw(const Encounter& enc, int steps,
                                                               std::mt19937_64& rng) {
  const AdmissibleSpace& sp = enc.sv_space;
  const ActionBounds& box = sp.bounds;
  std::uniform_real_distribution<double> ux(box.ax_min, box.ax_max);
  std::uniform_real_distribution<double> uy(box.ay_min, box.ay_max);
  const Direction dir = enc.sv_mats.direction;

  const Eigen::Vector4d z0 = to_template(enc.sv, dir);
  const Polytope rows0 = sp.state_at(0);
  const VectorXd slack0 =
      rows0.rows() > 0 ? VectorXd((rows0.g() * z0 - rows0.h()).cwiseMax(0.0)) : VectorXd();

  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<TemplateControl> seq;
    VehicleState s = enc.sv;
    bool ok = true;
    for (int k = 1; k <= steps && ok; ++k) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        TemplateControl u{ux(rng), uy(rng)};
        if (!sp.action.contains(u.vec())) continue;
        const VehicleState next = step(s, u, enc.sv_mats);
        const Polytope rows = sp.state_at(k);
        const Eigen::Vector4d z = to_template(next, dir);
        bool inside = true;
        for (Eigen::Index i = 0; i < rows.rows() && inside; ++i) {
          const double allowed = rows.h()(i) + (i < slack0.size() ? slack0(i) : 0.0) + 1e-9;
          inside = rows.g().row(i).dot(z) <= allowed;
        }
        if (!inside) continue;
        seq.push_back(u);
        s = next;
        placed = true;
      }
      ok = placed;
    }
    if (ok) return seq;
  }
  return std::nullopt;
}

double final_distance(const Encounter& enc, const std::vector<TemplateControl>& sv_controls,
                      const std::vector<VehicleState>& pov_reference, int steps) {
  const VehicleState sv = rollout(enc.sv, sv_controls, enc.sv_mats).back();
  const VehicleState& p = pov_reference.at(static_cast<std::size_t>(steps));
  return std::hypot(p.x - sv.x, p.y - sv.y);
}

double rms(const std::vector<double>& errors) {
  if (errors.empty()) return 0.0;
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

}  // namespace adversim::testing
