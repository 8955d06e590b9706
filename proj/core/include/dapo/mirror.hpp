#pragma once

#include <vector>

#include "dapo/divergence.hpp"
#include "dapo/mdp.hpp"

namespace dapo {

// Loss gradient g_t over (s,a). For the default linear loss -<r, mu> this is -r.
struct LossVector {
  MatrixXd g;
};

struct ProjectionReport {
  OccupancyMeasure mu;
  int dual_iterations = 0;
  double residual = 0.0;
  double divergence_value = 0.0;  // D_F(mu, mu_tilde)
};

// Dual-space step grad F(mu~) = grad F(mu_t) - eta g. Only the joint
// negative-entropy map is invertible; other kinds are rejected.
MatrixXd mirror_map_step(const OccupancyMeasure& mu_t, const LossVector& g, double eta,
                         const LegendreFunction& f);

// KL projection of mu_tilde onto the flow polytope, by damped Newton ascent on
// the Lagrangian dual over one multiplier per flow constraint.
ProjectionReport bregman_project(const Mdp& mdp, const MatrixXd& mu_tilde,
                                 const LegendreFunction& f, double tol = 1e-8,
                                 int max_iterations = 10000);

// argmin over the flow polytope of D_F(mu, mu_t) + eta <g, mu>, via
// bregman_project(mirror_map_step(...)).
OccupancyMeasure mirror_descent_step(const Mdp& mdp, const OccupancyMeasure& mu_t,
                                     const LossVector& g, double eta, const LegendreFunction& f);

struct MirrorDescentRecord {
  int iteration = 0;
  double performance = 0.0;
  double residual = 0.0;
};

// Entropy mirror descent with fixed loss gradient g = -r, starting from the
// occupancy of the uniform policy. Records J(pi_mu_t) every iteration.
std::vector<MirrorDescentRecord> run_mirror_descent(const Mdp& mdp, double eta, int iterations);

}  // namespace dapo
