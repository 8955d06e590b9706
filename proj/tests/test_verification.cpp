#include <doctest.h>

#include <sstream>

#include "dapo/verification.hpp"

using namespace dapo;

TEST_CASE("identical policies collapse the bias report") {
  Rng rng(61);
  const Mdp mdp = random_mdp(4, 3, 0.9, rng);
  const PolicyParameters theta = random_tabular_policy(4, 3, rng);

  const VectorXd exact = exact_gradient_f(mdp, theta, theta, 0.8);
  const VectorXd biased = biased_gradient_g(mdp, theta, theta, 0.8);
  CHECK((exact - biased).cwiseAbs().maxCoeff() < 1e-14);

  const BiasBoundReport report = bias_bound_check(mdp, theta, theta, 0.8);
  CHECK(report.delta < 1e-12);
  CHECK(report.divergence < 1e-14);
  CHECK(report.satisfied);
  CHECK(report.zeta1 >= 0.0);
  CHECK(report.zeta2 >= 0.0);
  CHECK(report.c >= 0.0);
}

TEST_CASE("zero reward and identical policies give a zero gradient") {
  Rng rng(67);
  Mdp mdp = random_mdp(3, 2, 0.9, rng);
  mdp.reward.setZero();
  const PolicyParameters theta = random_tabular_policy(3, 2, rng);
  CHECK(exact_gradient_f(mdp, theta, theta, 1.3).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("biased gradient is linear in the reward for fixed policies") {
  Rng rng(71);
  Mdp mdp = random_mdp(3, 2, 0.9, rng);
  const PolicyParameters theta = random_tabular_policy(3, 2, rng);
  const PolicyParameters theta_tilde = random_tabular_policy(3, 2, rng);
  const VectorXd g1 = biased_gradient_g(mdp, theta, theta_tilde, 0.0);
  mdp.reward *= 2.0;
  const VectorXd g2 = biased_gradient_g(mdp, theta, theta_tilde, 0.0);
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("different policies produce a nonzero gradient gap") {
  Rng rng(73);
  const Mdp mdp = random_mdp(4, 3, 0.9, rng);
  const PolicyParameters theta = random_tabular_policy(4, 3, rng);
  const PolicyParameters theta_tilde = random_tabular_policy(4, 3, rng);
  const BiasBoundReport report = bias_bound_check(mdp, theta, theta_tilde, 0.5);
  CHECK(report.delta > 0.0);
  CHECK(report.divergence > 0.0);
  CHECK(report.satisfied);
}

TEST_CASE("doubling the reward scale does not shrink zeta2") {
  Rng rng(79);
  Mdp mdp = random_mdp(4, 3, 0.9, rng);
  const PolicyParameters theta = random_tabular_policy(4, 3, rng);
  const PolicyParameters theta_tilde = random_tabular_policy(4, 3, rng);
  const BiasBoundReport before = bias_bound_check(mdp, theta, theta_tilde, 0.5);
  mdp.reward *= 2.0;
  const BiasBoundReport after = bias_bound_check(mdp, theta, theta_tilde, 0.5);
  CHECK(after.zeta2 >= before.zeta2 - 1e-12);
}

TEST_CASE("pg check is exact for constant f tables") {
  Rng rng(83);
  const Mdp mdp = random_mdp(4, 2, 0.9, rng);
  const PolicyParameters theta = random_tabular_policy(4, 2, rng);
  CHECK(pg_theorem_check(mdp, theta, MatrixXd::Zero(4, 2)) == 0.0);
  // Constant f: the occupancy normalization makes the objective constant.
  CHECK(pg_theorem_check(mdp, theta, MatrixXd::Constant(4, 2, 3.0)) < 1e-8);
  CHECK_THROWS_AS(pg_theorem_check(mdp, theta, MatrixXd::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("non-tabular parameterizations are rejected") {
  Rng rng(89);
  const Mdp mdp = random_mdp(3, 2, 0.9, rng);
  const Architecture arch = make_architecture(ModelKind::LinearSoftmax, 3, 2);
  const PolicyParameters linear = make_policy(arch, rng);
  const PolicyParameters tabular = random_tabular_policy(3, 2, rng);
  CHECK_THROWS_AS(exact_gradient_f(mdp, linear, tabular, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(biased_gradient_g(mdp, tabular, linear, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(bias_bound_check(mdp, linear, linear, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(pg_theorem_check(mdp, linear, MatrixXd::Zero(3, 2)), std::invalid_argument);
}

TEST_CASE("random problem generators produce valid instances") {
  Rng rng(97);
  const Mdp mdp = random_mdp(5, 4, 0.95, rng);
  CHECK_NOTHROW(validate_mdp(mdp));
  const PolicyParameters theta = random_tabular_policy(5, 4, rng, 2.0);
  CHECK(theta.theta.size() == 20);
  CHECK(theta.theta.cwiseAbs().maxCoeff() <= 2.0);
}

TEST_CASE("the bundled verification suite passes and prints a table") {
  const auto results = run_verification(123);
  std::ostringstream out;
  const int failures = print_verification(out, results);
  CHECK(failures == 0);
  for (const auto& result : results) CHECK(result.passed);
  CHECK(out.str().find("PASS") != std::string::npos);
  CHECK(out.str().find("all checks passed") != std::string::npos);
}
