#include "dapo/mirror.hpp"

namespace dapo {

MatrixXd mirror_map_step(const OccupancyMeasure& mu_t, const LossVector& g, double eta,
                         const LegendreFunction& f) {
  if (f.kind != LegendreKind::JointNegativeEntropy)
    throw std::invalid_argument("mirror_map_step: gradient map invertible only for the joint entropy");
  if (mu_t.weights.rows() != g.g.rows() || mu_t.weights.cols() != g.g.cols())
    throw std::invalid_argument("mirror_map_step: shape mismatch");
  if (eta < 0.0) throw std::invalid_argument("mirror_map_step: eta must be nonnegative");
  MatrixXd out(mu_t.weights.rows(), mu_t.weights.cols());
  for (int s = 0; s < out.rows(); ++s) {
    for (int a = 0; a < out.cols(); ++a) {
      out(s, a) = std::max(mu_t.weights(s, a), kProbFloor) * std::exp(-eta * g.g(s, a));
      if (!std::isfinite(out(s, a)))
        throw std::runtime_error("mirror_map_step: non-finite entry at (s=" + std::to_string(s) +
                                 ", a=" + std::to_string(a) + ")");
    }
  }
  return out;
}

namespace {

// Flattened flow-constraint matrix: B(s', sa) = 1{state(sa)=s'} - gamma P(s'|sa).
MatrixXd flow_matrix(const Mdp& mdp) {
  const int n = mdp.num_states;
  const int na = mdp.num_actions;
  MatrixXd b = -mdp.discount * mdp.transition.transpose();
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a) b(s, mdp.sa(s, a)) += 1.0;
  return b;
}

// mu_v(s,a) = mu_tilde(s,a) exp(gamma <P(.|s,a), v> - v(s)), the stationary
// point of the Lagrangian at multipliers v.
VectorXd dual_point(const Mdp& mdp, const VectorXd& mu_tilde_flat, const VectorXd& v) {
  VectorXd mu(mu_tilde_flat.size());
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const int k = mdp.sa(s, a);
      const double z = mdp.discount * mdp.transition.row(k).dot(v) - v[s];
      mu[k] = mu_tilde_flat[k] * std::exp(z);
    }
  }
  return mu;
}

double dual_value(const Mdp& mdp, const VectorXd& mu_tilde_flat, const VectorXd& v) {
  const VectorXd mu = dual_point(mdp, mu_tilde_flat, v);
  return mu_tilde_flat.sum() - mu.sum() - (1.0 - mdp.discount) * mdp.initial_dist.dot(v);
}

}  // namespace

ProjectionReport bregman_project(const Mdp& mdp, const MatrixXd& mu_tilde,
                                 const LegendreFunction& f, double tol, int max_iterations) {
  if (f.kind != LegendreKind::JointNegativeEntropy)
    throw std::invalid_argument("bregman_project: only the joint entropy projection is supported");
  if (mu_tilde.rows() != mdp.num_states || mu_tilde.cols() != mdp.num_actions)
    throw std::invalid_argument("bregman_project: shape mismatch");
  if ((mu_tilde.array() <= 0.0).any())
    throw std::invalid_argument("bregman_project: mu_tilde must be strictly positive");

  const int n = mdp.num_states;
  const MatrixXd b = flow_matrix(mdp);
  // Flatten row-major by (s,a) index.
  VectorXd mu_tilde_flat(n * mdp.num_actions);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) mu_tilde_flat[mdp.sa(s, a)] = mu_tilde(s, a);

  VectorXd v = VectorXd::Zero(n);
  double best_residual = std::numeric_limits<double>::infinity();
  int it = 0;
  VectorXd mu = dual_point(mdp, mu_tilde_flat, v);
  for (; it < max_iterations; ++it) {
    const VectorXd c = b * mu - (1.0 - mdp.discount) * mdp.initial_dist;
    const double residual = c.cwiseAbs().maxCoeff();
    best_residual = std::min(best_residual, residual);
    if (residual <= tol) break;

    // Damped Newton on the concave dual: (B diag(mu) B^T + ridge) dv = c.
    MatrixXd h = b * mu.asDiagonal() * b.transpose();
    h.diagonal().array() += 1e-12 + 1e-9 * h.diagonal().maxCoeff();
    const VectorXd dv = h.ldlt().solve(c);
    const double slope = c.dot(dv);

    const double g0 = dual_value(mdp, mu_tilde_flat, v);
    double tau = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd cand = v + tau * dv;
      const double g1 = dual_value(mdp, mu_tilde_flat, cand);
      if (std::isfinite(g1) && g1 >= g0 + 1e-4 * tau * slope) {
        v = cand;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted)
      throw std::runtime_error("bregman_project: line search stalled, best residual " +
                               std::to_string(best_residual));
    mu = dual_point(mdp, mu_tilde_flat, v);
  }

  const VectorXd c = b * mu - (1.0 - mdp.discount) * mdp.initial_dist;
  const double residual = c.cwiseAbs().maxCoeff();
  if (residual > tol)
    throw std::runtime_error("bregman_project: dual ascent did not reach tolerance, residual " +
                             std::to_string(residual));

  ProjectionReport report;
  report.mu.weights.resize(n, mdp.num_actions);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) report.mu.weights(s, a) = mu[mdp.sa(s, a)];
  report.mu.residual = occupancy_residual(mdp, report.mu);
  report.dual_iterations = it;
  report.residual = report.mu.residual;
  report.divergence_value = bregman(f, report.mu.weights, mu_tilde);
  return report;
}

OccupancyMeasure mirror_descent_step(const Mdp& mdp, const OccupancyMeasure& mu_t,
                                     const LossVector& g, double eta, const LegendreFunction& f) {
  const MatrixXd mu_tilde = mirror_map_step(mu_t, g, eta, f);
  return bregman_project(mdp, mu_tilde, f).mu;
}

std::vector<MirrorDescentRecord> run_mirror_descent(const Mdp& mdp, double eta, int iterations) {
  const LegendreFunction f{LegendreKind::JointNegativeEntropy};
  const LossVector g{-mdp.reward};

  OccupancyMeasure mu = occupancy(mdp, uniform_policy(mdp.num_states, mdp.num_actions));
  std::vector<MirrorDescentRecord> trace;
  trace.push_back({0, performance(mdp, policy_from_occupancy(mu)), mu.residual});
  for (int t = 1; t <= iterations; ++t) {
    mu.weights = mu.weights.cwiseMax(kProbFloor);
    mu = mirror_descent_step(mdp, mu, g, eta, f);
    trace.push_back({t, performance(mdp, policy_from_occupancy(mu)), mu.residual});
  }
  return trace;
}

}  // namespace dapo
