#pragma once

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <adversim/qp.hpp>
#include <adversim/worst_case.hpp>

namespace adversim::testing {

/// Solution of a strictly convex QP by enumerating every candidate active
/// set and keeping the KKT point that is primal and dual feasible.
struct BruteForceQp {
  Eigen::VectorXd x;
  double objective = 0.0;
};
std::optional<BruteForceQp> brute_force_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                                           const Eigen::MatrixXd& gi, const Eigen::VectorXd& hi,
                                           const Eigen::MatrixXd& ae = {},
                                           const Eigen::VectorXd& be = {});

/// Random strictly convex QP with a strictly feasible interior point.
struct RandomQp {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd gi;
  Eigen::VectorXd hi;
  Eigen::MatrixXd ae;
  Eigen::VectorXd be;
};
RandomQp random_qp(std::mt19937_64& rng, int n, int m, int meq);

/// Every control sequence drawn from a levels x levels grid over the box.
std::vector<std::vector<TemplateControl>> grid_sequences(const ActionBounds& box, int levels,
                                                         int steps);

/// min over POV grid sequences of max over SV grid sequences of the final
/// squared center distance, both vehicles rolled out with the template model.
double grid_minimax(const Encounter& enc, int steps, int levels);

/// Largest final squared distance an SV can reach against a fixed POV end
/// point, over the corners of the per-step action box.
double worst_sv_response(const Encounter& enc, int steps, const Eigen::Vector2d& pov_end);

/// Uniform random SV control sequence whose template rollout stays within the
/// SV state rows (each row slackened by its violation at the start state).
/// Returns nothing if rejection sampling gives up.
std::optional<std::vector<TemplateControl>> admissible_sv_draw(const Encounter& enc, int steps,
                                                               std::mt19937_64& rng);

/// Final center distance between the SV rolled out with `sv_controls` and
/// the POV reference at step `steps`.
double final_distance(const Encounter& enc, const std::vector<TemplateControl>& sv_controls,
                      const std::vector<VehicleState>& pov_reference, int steps);

/// Root mean square of `errors`.
double rms(const std::vector<double>& errors);

}  // namespace adversim::testing
