#include "dapo/divergence.hpp"

namespace dapo {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

double LegendreFunction::value(const MatrixXd& x) const {
  switch (kind) {
    case LegendreKind::JointNegativeEntropy: {
      double acc = 0.0;
      for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) acc += xlogx(x(i, j)) - x(i, j);
      return acc;
    }
    case LegendreKind::ConditionalNegativeEntropy: {
      double acc = 0.0;
      for (int s = 0; s < x.rows(); ++s) {
        const double mass = x.row(s).sum();
        for (int a = 0; a < x.cols(); ++a) {
          const double m = x(s, a);
          if (m > 0.0) acc += m * std::log(m / std::max(mass, kProbFloor));
        }
      }
      return acc;
    }
  }
  throw std::logic_error("LegendreFunction: unknown kind");
}

MatrixXd LegendreFunction::gradient(const MatrixXd& x) const {
  MatrixXd g(x.rows(), x.cols());
  switch (kind) {
    case LegendreKind::JointNegativeEntropy:
      for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) g(i, j) = clamped_log(x(i, j));
      return g;
    case LegendreKind::ConditionalNegativeEntropy:
      // dF/dmu(s,a) = log( mu(s,a) / sum_b mu(s,b) ), i.e. log pi_mu(a|s).
      for (int s = 0; s < x.rows(); ++s) {
        const double mass = x.row(s).sum();
        for (int a = 0; a < x.cols(); ++a)
          g(s, a) = clamped_log(x(s, a)) - clamped_log(mass);
      }
      return g;
  }
  throw std::logic_error("LegendreFunction: unknown kind");
}

double bregman(const LegendreFunction& f, const MatrixXd& x, const MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("bregman: shape mismatch");
  if ((x.array() < 0.0).any())
    throw std::invalid_argument("bregman: x must be nonnegative");
  if ((y.array() <= 0.0).any())
    throw std::invalid_argument("bregman: y must be strictly positive");
  const MatrixXd gy = f.gradient(y);
  return f.value(x) - f.value(y) - (gy.array() * (x - y).array()).sum();
}

double kl(const VectorXd& p, const VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - clamped_log(q[i]));
  return acc;
}

double conditional_divergence(const StateDistribution& d, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, const LegendreFunction& f) {
  if (pi1.probs.rows() != pi2.probs.rows() || pi1.probs.cols() != pi2.probs.cols() ||
      d.weights.size() != pi1.probs.rows())
    throw std::invalid_argument("conditional_divergence: shape mismatch");
  double acc = 0.0;
  for (int s = 0; s < pi1.probs.rows(); ++s)
    acc += d.weights[s] * bregman(f, pi1.probs.row(s), pi2.probs.row(s).cwiseMax(kProbFloor));
  return acc;
}

MatrixXd grad_f_difference(const LegendreFunction& f, const TabularPolicy& policy,
                           const TabularPolicy& behavior, const Mdp& mdp) {
  switch (f.kind) {
    case LegendreKind::ConditionalNegativeEntropy: {
      MatrixXd out(policy.probs.rows(), policy.probs.cols());
      for (int s = 0; s < out.rows(); ++s)
        for (int a = 0; a < out.cols(); ++a)
          out(s, a) = clamped_log(policy.probs(s, a)) - clamped_log(behavior.probs(s, a));
      return out;
    }
    case LegendreKind::JointNegativeEntropy: {
      const OccupancyMeasure mu = occupancy(mdp, policy);
      const OccupancyMeasure mu_t = occupancy(mdp, behavior);
      MatrixXd out(mu.weights.rows(), mu.weights.cols());
      for (int s = 0; s < out.rows(); ++s)
        for (int a = 0; a < out.cols(); ++a)
          out(s, a) = clamped_log(mu.weights(s, a)) - clamped_log(mu_t.weights(s, a));
      return out;
    }
  }
  throw std::logic_error("grad_f_difference: unknown kind");
}

}  // namespace dapo
