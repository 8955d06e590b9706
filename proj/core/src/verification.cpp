#include "dapo/verification.hpp"

#include <cstdio>
#include <limits>
#include <ostream>

#include "dapo/divergence.hpp"

namespace dapo {

namespace {

void require_tabular(const PolicyParameters& params, const char* who) {
  if (params.arch.kind != ModelKind::TabularSoftmax)
    throw std::invalid_argument(std::string(who) + ": exact summation needs tabular softmax");
}

// Advantage of the pseudo-reward log(pi/pi_tilde) under pi.
MatrixXd pseudo_advantage(const Mdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_tilde) {
  MatrixXd f(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      f(s, a) = clamped_log(pi.probs(s, a)) - clamped_log(pi_tilde.probs(s, a));
  const MatrixXd q = discounted_operator(mdp, pi, f);
  MatrixXd adv = q;
  for (int s = 0; s < mdp.num_states; ++s) {
    const double v = pi.probs.row(s).dot(q.row(s));
    adv.row(s).array() -= v;
  }
  return adv;
}

VectorXd gradient_under(const Mdp& mdp, const PolicyParameters& theta,
                        const PolicyParameters& theta_tilde, double lambda,
                        const VectorXd& state_weights) {
  const TabularPolicy pi = policy_table(theta);
  const TabularPolicy pi_tilde = policy_table(theta_tilde);
  const ValueFunctions vf = value_functions(mdp, pi);
  const MatrixXd pseudo = pseudo_advantage(mdp, pi, pi_tilde);
  VectorXd grad = VectorXd::Zero(theta.theta.size());
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      grad += state_weights[s] * pi.probs(s, a) *
              (vf.advantage(s, a) - lambda * pseudo(s, a)) * log_prob_gradient(theta, s, a);
  return grad;
}

}  // namespace

VectorXd exact_gradient_f(const Mdp& mdp, const PolicyParameters& theta,
                          const PolicyParameters& theta_tilde, double lambda) {
  require_tabular(theta, "exact_gradient_f");
  require_tabular(theta_tilde, "exact_gradient_f");
  const StateDistribution d = state_distribution(mdp, policy_table(theta));
  return gradient_under(mdp, theta, theta_tilde, lambda, d.weights);
}

VectorXd biased_gradient_g(const Mdp& mdp, const PolicyParameters& theta,
                           const PolicyParameters& theta_tilde, double lambda) {
  require_tabular(theta, "biased_gradient_g");
  require_tabular(theta_tilde, "biased_gradient_g");
  const StateDistribution d = state_distribution(mdp, policy_table(theta_tilde));
  return gradient_under(mdp, theta, theta_tilde, lambda, d.weights);
}

BiasBoundReport bias_bound_check(const Mdp& mdp, const PolicyParameters& theta,
                                 const PolicyParameters& theta_tilde, double lambda) {
  require_tabular(theta, "bias_bound_check");
  require_tabular(theta_tilde, "bias_bound_check");
  const TabularPolicy pi = policy_table(theta);
  const TabularPolicy pi_tilde = policy_table(theta_tilde);

  BiasBoundReport report;
  report.delta = (exact_gradient_f(mdp, theta, theta_tilde, lambda) -
                  biased_gradient_g(mdp, theta, theta_tilde, lambda))
                     .norm();

  const StateDistribution d = state_distribution(mdp, pi);
  for (int s = 0; s < mdp.num_states; ++s)
    report.divergence += d.weights[s] * kl(pi.probs.row(s).transpose().eval(),
                                           pi_tilde.probs.row(s).transpose().eval());

  for (int s = 0; s < mdp.num_states; ++s) {
    double expectation = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a)
      expectation += pi.probs(s, a) * log_prob_gradient(theta, s, a).norm();
    report.zeta1 = std::max(report.zeta1, expectation);
  }

  const ValueFunctions vf = value_functions(mdp, pi);
  const MatrixXd pseudo = pseudo_advantage(mdp, pi, pi_tilde);
  report.zeta2 = std::max(vf.advantage.cwiseAbs().maxCoeff(),
                          (vf.advantage - lambda * pseudo).cwiseAbs().maxCoeff());

  const double factor = mdp.discount * report.zeta1 * report.zeta2 / (1.0 - mdp.discount);
  report.c = 2.0 * factor * factor;
  report.satisfied = report.delta * report.delta <= report.c * report.divergence + 1e-12;
  return report;
}

double pg_theorem_check(const Mdp& mdp, const PolicyParameters& theta, const MatrixXd& f) {
  require_tabular(theta, "pg_theorem_check");
  if (f.rows() != mdp.num_states || f.cols() != mdp.num_actions)
    throw std::invalid_argument("pg_theorem_check: f table shape mismatch");

  const TabularPolicy pi = policy_table(theta);
  const StateDistribution d = state_distribution(mdp, pi);
  const MatrixXd q = discounted_operator(mdp, pi, f);
  VectorXd analytic = VectorXd::Zero(theta.theta.size());
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      analytic += d.weights[s] * q(s, a) * pi.probs(s, a) * log_prob_gradient(theta, s, a);

  const Architecture arch = theta.arch;
  const auto objective = [&](const VectorXd& x) {
    PolicyParameters p{arch, x};
    const OccupancyMeasure mu = occupancy(mdp, policy_table(p));
    return (f.array() * mu.weights.array()).sum();
  };
  const VectorXd fd = finite_difference_gradient(objective, theta.theta, 1e-6);

  const double scale =
      std::max({1.0, analytic.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff()});
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

Mdp random_mdp(int num_states, int num_actions, double gamma, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = gamma;
  mdp.transition.resize(num_states * num_actions, num_states);
  mdp.reward.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) {
      for (int t = 0; t < num_states; ++t) mdp.transition(mdp.sa(s, a), t) = expo(rng);
      mdp.transition.row(mdp.sa(s, a)) /= mdp.transition.row(mdp.sa(s, a)).sum();
      mdp.reward(s, a) = unif(rng);
    }
  mdp.initial_dist.resize(num_states);
  for (int s = 0; s < num_states; ++s) mdp.initial_dist[s] = expo(rng);
  mdp.initial_dist /= mdp.initial_dist.sum();
  validate_mdp(mdp);
  return mdp;
}

PolicyParameters random_tabular_policy(int num_states, int num_actions, Rng& rng, double scale) {
  const Architecture arch =
      make_architecture(ModelKind::TabularSoftmax, num_states, num_actions);
  std::uniform_real_distribution<double> unif(-scale, scale);
  PolicyParameters params{arch, VectorXd(arch.policy_param_count())};
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) params.theta[i] = unif(rng);
  return params;
}

namespace {

std::string format_value(const char* label, double value) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s=%.6g", label, value);
  return buf;
}

}  // namespace

std::vector<VerificationResult> run_verification(unsigned long seed) {
  std::vector<VerificationResult> results;
  Rng rng(seed);
  std::uniform_int_distribution<int> state_dist(2, 6);
  std::uniform_int_distribution<int> action_dist(2, 4);

  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int ns = state_dist(rng);
      const int na = action_dist(rng);
      const Mdp mdp = random_mdp(ns, na, 0.9, rng);
      const PolicyParameters theta = random_tabular_policy(ns, na, rng);
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      MatrixXd f(ns, na);
      for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) f(s, a) = unif(rng);
      worst = std::max(worst, pg_theorem_check(mdp, theta, f));
    }
    results.push_back({"policy-gradient identity (20 random instances)", worst < 1e-4,
                       format_value("max_rel_err", worst)});
  }

  {
    int violations = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Mdp mdp = random_mdp(4, 3, 0.9, rng);
      const PolicyParameters theta = random_tabular_policy(4, 3, rng);
      const PolicyParameters theta_tilde = random_tabular_policy(4, 3, rng);
      const BiasBoundReport report = bias_bound_check(mdp, theta, theta_tilde, 0.5);
      if (!report.satisfied) ++violations;
      if (report.c * report.divergence > 0.0)
        worst_ratio =
            std::max(worst_ratio, report.delta * report.delta / (report.c * report.divergence));
    }
    results.push_back({"gradient-bias bound (100 random pairs)", violations == 0,
                       format_value("max_delta2_over_cD", worst_ratio) +
                           ", violations=" + std::to_string(violations)});
  }

  {
    double worst = 0.0;
    const double lambda = 0.5;
    for (int i = 0; i < 5; ++i) {
      const Mdp mdp = random_mdp(3, 3, 0.9, rng);
      const PolicyParameters theta = random_tabular_policy(3, 3, rng);
      const PolicyParameters theta_tilde = random_tabular_policy(3, 3, rng);
      const VectorXd analytic = exact_gradient_f(mdp, theta, theta_tilde, lambda);
      const Architecture arch = theta.arch;
      const auto objective = [&](const VectorXd& x) {
        PolicyParameters p{arch, x};
        const TabularPolicy pi = policy_table(p);
        const TabularPolicy pi_tilde = policy_table(theta_tilde);
        const StateDistribution d = state_distribution(mdp, pi);
        double divergence = 0.0;
        for (int s = 0; s < mdp.num_states; ++s)
          divergence += d.weights[s] * kl(pi.probs.row(s).transpose().eval(),
                                          pi_tilde.probs.row(s).transpose().eval());
        return performance(mdp, pi) - lambda * divergence;
      };
      const VectorXd fd = finite_difference_gradient(objective, theta.theta, 1e-6);
      const double scale =
          std::max({1.0, analytic.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff()});
      worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
    }
    results.push_back({"exact gradient matches finite differences of J - lambda*D",
                       worst < 1e-4, format_value("max_rel_err", worst)});
  }

  {
    const Mdp mdp = random_mdp(4, 3, 0.9, rng);
    const PolicyParameters theta = random_tabular_policy(4, 3, rng);
    VectorXd direction(theta.theta.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < direction.size(); ++i) direction[i] = normal(rng);
    direction /= direction.norm();
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::string detail;
    for (double h : {1e-1, 1e-2, 1e-3}) {
      PolicyParameters theta_tilde = theta;
      theta_tilde.theta += h * direction;
      const BiasBoundReport report = bias_bound_check(mdp, theta, theta_tilde, 0.5);
      monotone = monotone && report.delta < previous;
      previous = report.delta;
      if (!detail.empty()) detail += ", ";
      detail += format_value("delta", report.delta);
    }
    results.push_back({"bias vanishes as the policies approach", monotone, detail});
  }

  {
    const Mdp mdp = random_mdp(4, 3, 0.9, rng);
    const PolicyParameters theta = random_tabular_policy(4, 3, rng);
    const BiasBoundReport report = bias_bound_check(mdp, theta, theta, 0.7);
    const bool ok = report.delta < 1e-12 && report.divergence < 1e-12 && report.satisfied;
    results.push_back({"identical policies give zero bias and zero divergence", ok,
                       format_value("delta", report.delta) + ", " +
                           format_value("divergence", report.divergence)});
  }

  return results;
}

int print_verification(std::ostream& out, const std::vector<VerificationResult>& results) {
  int failures = 0;
  for (const VerificationResult& result : results) {
    out << (result.passed ? "PASS" : "FAIL") << "  " << result.name;
    if (!result.detail.empty()) out << "  [" << result.detail << "]";
    out << '\n';
    if (!result.passed) ++failures;
  }
  out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
      << '\n';
  return failures;
}

}  // namespace dapo
