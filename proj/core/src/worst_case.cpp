#include "adversim/worst_case.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adversim/horizon.hpp"

namespace adversim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int horizon_steps(double t, double delta) {
  if (!(delta > 0.0) || !(t > 0.0)) throw Error("horizon and time step must be positive");
  const double ratio = t / delta;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6) {
    throw Error("horizon must be a positive multiple of the time step");
  }
  return static_cast<int>(rounded);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Distance (in control units) of the point projected in a support query.
constexpr double kSupportReach = 1e6;
// End points closer than this (m) are one vertex.
constexpr double kVertexMerge = 1e-7;
constexpr int kMaxSupportQueries = 64;

// Feasible set of one player's stacked controls.
struct Player {
  HorizonMap map;
  Polytope action;  // stacked action rows
  StateRows state;  // unrelaxed stacked state rows
  VectorXd relax;
  std::vector<Eigen::Vector2d> vertices;
  VectorXd base;  // a feasible control sequence
  bool relaxed = false;

  Player(const AdmissibleSpace& space, const VehicleState& s0, const TemplateMatrices& m,
         int steps, const Eigen::Vector2d& origin, double qp_tol, int qp_max_iter,
         const VectorXd* hint)
      : map(build_horizon(to_template(s0, m.direction), m, steps, origin)),
        action(stacked_action_rows(space.action, steps)),
        state(stacked_state_rows(space, map, VectorXd::Zero(space.state_rows()))),
        relax(initial_violation(space, map)),
        vertices(polygon_vertices(space.action)) {
    if (vertices.empty()) throw Error("action polytope has no vertices");
    relaxed = relax.size() > 0 && relax.maxCoeff() > 0.0;
    const VectorXd zero = VectorXd::Zero(map.controls());
    if (action.contains(zero) && raised().contains(zero)) {
      base = zero;
      return;
    }
    // A feasible sequence one step shorter, extended by one control.
    if (hint != nullptr && hint->size() + 2 == map.controls()) {
      const Polytope lifted = raised();
      VectorXd cand(map.controls());
      cand.head(hint->size()) = *hint;
      cand.tail<2>().setZero();
      if (action.contains(cand) && lifted.contains(cand)) {
        base = std::move(cand);
        return;
      }
      for (const auto& w : vertices) {
        cand.tail<2>() = w;
        if (action.contains(cand) && lifted.contains(cand)) {
          base = std::move(cand);
          return;
        }
      }
    }
    // Least-effort feasible sequence.
    const Eigen::Index n = map.controls();
    QpOptions opt;
    opt.tol = qp_tol;
    opt.max_iter = qp_max_iter;
    RelaxedSolve rs = solve_relaxed(MatrixXd::Identity(n, n), VectorXd::Zero(n), action,
                                    state.rows, state.row_class, relax, opt);
    relaxed = relaxed || rs.elastic;
    relax = rs.relax;
    base = rs.sol.x;
  }

  Polytope raised() const { return raise_rows(state.rows, state.row_class, relax); }
};

double sq_dist(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - b).squaredNorm();
}

class Game {
 public:
  Game(const Encounter& enc, int steps, const MinimaxOptions& opt,
       const Game* shorter = nullptr)
      : opt_(opt),
        steps_(steps),
        origin_(enc.sv.x, enc.sv.y),
        pov_(enc.pov_space, enc.pov, enc.pov_mats, steps, origin_, opt.qp_tol, opt.qp_max_iter,
             shorter != nullptr ? &shorter->pov_.base : nullptr),
        sv_(enc.sv_space, enc.sv, enc.sv_mats, steps, origin_, opt.qp_tol, opt.qp_max_iter,
            shorter != nullptr ? &shorter->sv_.base : nullptr),
        e_(pov_.map.end_free()),
        m_(pov_.map.end_gamma()),
        d_(sv_.map.end_free()),
        k_(sv_.map.end_gamma()),
        sv_feasible_(sv_.raised().rows() > 0 ? sv_.action.intersect(sv_.raised()) : sv_.action) {
    if (std::abs(enc.sv_mats.delta - enc.pov_mats.delta) > 1e-12) {
      throw Error("SV and POV template matrices use different time steps");
    }
  }

  // Squared distance from the SV's base endpoint to the POV's reachable box.
  double lower_bound() const {
    const Eigen::Vector2d q = sv_end(sv_.base);
    double total = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      double lo = e_(axis);
      double hi = e_(axis);
      for (int k = 0; k < steps_; ++k) {
        const Eigen::RowVector2d row = m_.block(axis, 2 * k, 1, 2);
        double kmin = kInf;
        double kmax = -kInf;
        for (const auto& w : pov_.vertices) {
          const double val = row.dot(w);
          kmin = std::min(kmin, val);
          kmax = std::max(kmax, val);
        }
        lo += kmin;
        hi += kmax;
      }
      const double gap = std::max({lo - q(axis), q(axis) - hi, 0.0});
      total += gap * gap;
    }
    return total;
  }

  MinimaxResult solve() {
    MinimaxResult res;
    VectorXd u = pov_.base;
    std::vector<VectorXd> responses;
    std::vector<Eigen::Vector2d> ends;

    const SvVertex& first = best_response(u);
    responses.push_back(first.controls);
    ends.push_back(first.end);
    double value = worst_over(u, ends);
    res.log.push_back({HalfStep::Kind::Sv, value});

    QpSolution warm;
    bool have_warm = false;
    for (int sweep = 1; sweep <= opt_.max_sweeps; ++sweep) {
      res.iterations = sweep;
      VectorXd cand = pov_step(ends, u, warm, have_warm);
      const double cand_value = worst_over(cand, ends);
      if (cand_value <= value) {
        u = std::move(cand);
        value = cand_value;
      }
      res.log.push_back({HalfStep::Kind::Pov, value});

      const SvVertex& w = best_response(u);
      const double gain = sq_dist(pov_end(u), w.end) - value;
      if (gain > 0.0) {
        responses.push_back(w.controls);
        ends.push_back(w.end);
        value += gain;
      }
      res.log.push_back({HalfStep::Kind::Sv, value});
      if (gain < opt_.tol) {
        res.converged = true;
        break;
      }
    }

    res.value = value;
    res.pov_controls = unstack_controls(u);
    res.sv_controls = unstack_controls(responses[argmax(u, ends)]);
    res.relaxed = pov_.relaxed || sv_.relaxed;
    return res;
  }

 private:
  Eigen::Vector2d pov_end(const VectorXd& u) const { return e_ + m_ * u; }
  Eigen::Vector2d sv_end(const VectorXd& v) const { return d_ + k_ * v; }

  double worst_over(const VectorXd& u, const std::vector<Eigen::Vector2d>& ends) const {
    const Eigen::Vector2d p = pov_end(u);
    double best = 0.0;
    for (const auto& q : ends) best = std::max(best, sq_dist(p, q));
    return best;
  }

  std::size_t argmax(const VectorXd& u, const std::vector<Eigen::Vector2d>& ends) const {
    const Eigen::Vector2d p = pov_end(u);
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const double val = sq_dist(p, ends[i]);
      if (val > best_val) {
        best_val = val;
        best = i;
      }
    }
    return best;
  }

  struct SvVertex {
    Eigen::Vector2d end;
    VectorXd controls;
  };

  // Feasible SV sequence maximizing dir . q(v): the projection of a far point
  // along K' dir onto the feasible set lands on the optimal face.
  SvVertex support(const Eigen::Vector2d& dir) const {
    const Eigen::Index n = sv_.map.controls();
    VectorXd w = k_.transpose() * dir;
    const double norm = w.norm();
    if (norm <= 1e-12) return {sv_end(sv_.base), sv_.base};
    // Without binding state rows the LP separates per step into a vertex
    // choice on the action polygon.
    VectorXd greedy = sv_.base;
    for (int k = 0; k < steps_; ++k) {
      const Eigen::Vector2d gk = w.segment<2>(2 * k);
      if (gk.lpNorm<Eigen::Infinity>() <= 1e-12) continue;
      double best = -kInf;
      for (const auto& vert : sv_.vertices) {
        const double val = gk.dot(vert);
        if (val > best + 1e-15) {
          best = val;
          greedy.segment<2>(2 * k) = vert;
        }
      }
    }
    if (sv_feasible_.contains(greedy)) return {sv_end(greedy), greedy};
    w *= kSupportReach / norm;
    QpOptions qo;
    qo.tol = opt_.qp_tol;
    qo.max_iter = opt_.qp_max_iter;
    qo.x0 = sv_.base;
    const QpProblem lp(MatrixXd::Identity(n, n), -w, sv_feasible_);
    const QpSolution sol = adversim::solve(lp, qo);
    const VectorXd v = sol.status == QpStatus::Optimal ? sol.x : sv_.base;
    return {sv_end(v), v};
  }

  // Vertices of the SV's reachable end-point polygon, counter-clockwise,
  // found by support queries along the outward normal of every edge until
  // no edge moves.
  const std::vector<SvVertex>& sv_polygon() {
    if (!sv_poly_.empty()) return sv_poly_;
    std::vector<SvVertex> hull;
    for (const Eigen::Vector2d& d : {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                    Eigen::Vector2d(-1, 0), Eigen::Vector2d(0, -1)}) {
      SvVertex s = support(d);
      if (hull.empty() || (s.end - hull.back().end).norm() > kVertexMerge) {
        hull.push_back(std::move(s));
      }
    }
    while (hull.size() > 1 && (hull.front().end - hull.back().end).norm() <= kVertexMerge) {
      hull.pop_back();
    }
    int budget = kMaxSupportQueries;
    std::size_t i = 0;
    while (hull.size() > 1 && i < hull.size() && budget-- > 0) {
      const Eigen::Vector2d a = hull[i].end;
      const Eigen::Vector2d b = hull[(i + 1) % hull.size()].end;
      const Eigen::Vector2d normal = Eigen::Vector2d(b.y() - a.y(), a.x() - b.x()).normalized();
      SvVertex s = support(normal);
      if (normal.dot(s.end - a) > kVertexMerge) {
        hull.insert(hull.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(s));
      } else {
        ++i;
      }
    }
    if (hull.empty()) hull.push_back({sv_end(sv_.base), sv_.base});
    sv_poly_ = std::move(hull);
    return sv_poly_;
  }

  // Exact SV best response: the polygon vertex farthest from the POV end point.
  const SvVertex& best_response(const VectorXd& u) {
    const Eigen::Vector2d p = pov_end(u);
    const auto& poly = sv_polygon();
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const double val = sq_dist(p, poly[i].end);
      if (val > best_val + 1e-12) {
        best_val = val;
        best = i;
      }
    }
    return poly[best];
  }

  // min_u |p(u)|^2 + t + w |u|^2  s.t.  t >= |q_i|^2 - 2 q_i . p(u).
  VectorXd pov_step(const std::vector<Eigen::Vector2d>& ends, const VectorXd& u_prev,
                    QpSolution& warm, bool& have_warm) {
    const Eigen::Index n = pov_.map.controls();
    const Eigen::Index nz = n + 1;
    MatrixXd hess = MatrixXd::Zero(nz, nz);
    hess.topLeftCorner(n, n) = 2.0 * (m_.transpose() * m_) +
                               2.0 * opt_.control_weight * MatrixXd::Identity(n, n);
    VectorXd grad = VectorXd::Zero(nz);
    grad.head(n) = 2.0 * m_.transpose() * e_;
    grad(n) = 1.0;

    const Eigen::Index na = pov_.action.rows();
    const Eigen::Index nc = static_cast<Eigen::Index>(ends.size());
    MatrixXd g = MatrixXd::Zero(na + nc, nz);
    VectorXd h(na + nc);
    g.topLeftCorner(na, n) = pov_.action.g();
    h.head(na) = pov_.action.h();
    for (Eigen::Index i = 0; i < nc; ++i) {
      const Eigen::Vector2d& q = ends[static_cast<std::size_t>(i)];
      g.row(na + i).head(n) = -2.0 * q.transpose() * m_;
      g(na + i, n) = -1.0;
      h(na + i) = 2.0 * q.dot(e_) - q.squaredNorm();
    }
    const Polytope hard(std::move(g), std::move(h));
    const Polytope soft = pad_columns(pov_.state.rows, nz);

    QpOptions qo;
    qo.tol = opt_.qp_tol;
    qo.max_iter = opt_.qp_max_iter;
    VectorXd z0(nz);
    z0.head(n) = u_prev;
    const Eigen::Vector2d p = pov_end(u_prev);
    double t0 = -kInf;
    for (const auto& q : ends) t0 = std::max(t0, q.squaredNorm() - 2.0 * q.dot(p));
    z0(n) = t0;
    qo.x0 = z0;
    if (have_warm) {
      // Cuts are appended after the action rows; soft rows follow the cuts.
      const Eigen::Index prev_cuts = nc - 1;
      for (int idx : warm.active) {
        if (idx < na + prev_cuts) {
          qo.active.push_back(idx);
        } else {
          qo.active.push_back(idx + 1);
        }
      }
    }
    RelaxedSolve rs = solve_relaxed(hess, grad, hard, soft, pov_.state.row_class,
                                    pov_.relax, qo);
    if (rs.elastic) pov_.relaxed = true;
    pov_.relax = rs.relax;
    warm = rs.sol;
    have_warm = true;
    return rs.sol.x.head(n);
  }

  MinimaxOptions opt_;
  int steps_;
  Eigen::Vector2d origin_;
  Player pov_;
  Player sv_;
  Eigen::Vector2d e_;
  MatrixXd m_;
  Eigen::Vector2d d_;
  MatrixXd k_;
  Polytope sv_feasible_;
  std::vector<SvVertex> sv_poly_;
};

}  // namespace

MinimaxResult best_response_minimax(const Encounter& enc, int steps,
                                    const MinimaxOptions& options) {
  if (steps < 1) throw Error("minimax horizon needs at least one step");
  Game game(enc, steps, options);
  return game.solve();
}

CaptureSearch search_capture(const Encounter& enc, double c, double t_bar,
                             const MinimaxOptions& options) {
  if (!(c > 0.0)) throw Error("capture diameter must be positive");
  const int max_steps = horizon_steps(t_bar, enc.pov_mats.delta);
  const double c2 = c * c;
  CaptureSearch out;
  std::optional<Game> prev;
  for (int n = 1; n <= max_steps; ++n) {
    Game game(enc, n, options, prev ? &*prev : nullptr);
    ScanEntry entry;
    entry.steps = n;
    entry.lower_bound = game.lower_bound();
    if (entry.lower_bound > c2) {
      entry.pruned = true;
      out.scan.push_back(entry);
      prev.emplace(std::move(game));
      continue;
    }
    MinimaxResult mm = game.solve();
    entry.value = mm.value;
    entry.converged = mm.converged;
    out.scan.push_back(entry);
    prev.emplace(std::move(game));
    if (mm.converged && mm.value <= c2) {
      CaptureResult cr;
      cr.steps = n;
      cr.t_star = n * enc.pov_mats.delta;
      cr.reference = rollout(enc.pov, mm.pov_controls, enc.pov_mats);
      cr.minimax = std::move(mm);
      out.capture = std::move(cr);
      break;
    }
  }
  return out;
}

std::optional<CaptureResult> find_min_capture_time(const Encounter& enc, double c,
                                                   double t_bar,
                                                   const MinimaxOptions& options) {
  return search_capture(enc, c, t_bar, options).capture;
}

std::optional<std::vector<VehicleState>> plan_worst_case(const Encounter& enc, double c,
                                                         double t_bar,
                                                         const MinimaxOptions& options) {
  auto cr = find_min_capture_time(enc, c, t_bar, options);
  if (!cr) return std::nullopt;
  return std::move(cr->reference);
}

}  // namespace adversim
