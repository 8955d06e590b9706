#include <doctest.h>

#include <sstream>

#include "dapo/mdp.hpp"
#include "dapo/verification.hpp"

using namespace dapo;

namespace {

// Deterministic 2-state, 2-action MDP with simple closed-form solutions.
Mdp two_state_mdp(double gamma = 0.9) {
  Mdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 2;
  mdp.discount = gamma;
  mdp.transition = MatrixXd::Zero(4, 2);
  mdp.transition(mdp.sa(0, 0), 0) = 1.0;  // stay
  mdp.transition(mdp.sa(0, 1), 1) = 1.0;  // move
  mdp.transition(mdp.sa(1, 0), 1) = 1.0;  // stay
  mdp.transition(mdp.sa(1, 1), 0) = 1.0;  // move back
  mdp.reward.resize(2, 2);
  mdp.reward << 0.0, 0.2, 1.0, 0.1;
  mdp.initial_dist.resize(2);
  mdp.initial_dist << 1.0, 0.0;
  return mdp;
}

}  // namespace

TEST_CASE("validate_mdp flags broken invariants") {
  Mdp mdp = two_state_mdp();
  CHECK_NOTHROW(validate_mdp(mdp));

  Mdp bad_row = mdp;
  bad_row.transition(0, 0) = 0.5;
  CHECK_THROWS_AS(validate_mdp(bad_row), std::invalid_argument);

  Mdp bad_gamma = mdp;
  bad_gamma.discount = 1.0;
  CHECK_THROWS_AS(validate_mdp(bad_gamma), std::invalid_argument);

  Mdp bad_init = mdp;
  bad_init.initial_dist << 0.7, 0.7;
  CHECK_THROWS_AS(validate_mdp(bad_init), std::invalid_argument);
}

TEST_CASE("state distribution matches a truncated geometric rollout sum") {
  Rng rng(3);
  const Mdp mdp = random_mdp(5, 3, 0.9, rng);
  const TabularPolicy pi = uniform_policy(5, 3);
  const StateDistribution d = state_distribution(mdp, pi);
  CHECK(d.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.weights.minCoeff() >= 0.0);

  // Independent oracle: d = (1-gamma) sum_t gamma^t d0^T M^t, truncated.
  const MatrixXd m = policy_transition_matrix(mdp, pi);
  VectorXd cur = mdp.initial_dist;
  VectorXd acc = VectorXd::Zero(5);
  double scale = 1.0 - mdp.discount;
  for (int t = 0; t < 2000; ++t) {
    acc += scale * cur;
    cur = m.transpose() * cur;
    scale *= mdp.discount;
  }
  CHECK((d.weights - acc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("occupancy satisfies the flow constraint and recovers its policy") {
  Rng rng(5);
  const Mdp mdp = random_mdp(4, 3, 0.95, rng);
  TabularPolicy pi = uniform_policy(4, 3);
  pi.probs << 0.7, 0.2, 0.1, 0.3, 0.3, 0.4, 0.1, 0.8, 0.1, 0.25, 0.5, 0.25;
  const OccupancyMeasure mu = occupancy(mdp, pi);
  CHECK(mu.residual < 1e-12);
  CHECK(occupancy_residual(mdp, mu) < 1e-12);
  CHECK(mu.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

  const TabularPolicy back = policy_from_occupancy(mu);
  CHECK((back.probs - pi.probs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("policy_from_occupancy gives zero-mass states a uniform row and flags them") {
  OccupancyMeasure mu;
  mu.weights.resize(2, 2);
  mu.weights << 0.6, 0.4, 0.0, 0.0;
  std::vector<int> flagged;
  const TabularPolicy pi = policy_from_occupancy(mu, &flagged);
  CHECK(flagged == std::vector<int>{1});
  CHECK(pi.probs(1, 0) == doctest::Approx(0.5));
  CHECK(pi.probs(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("value functions satisfy the Bellman equation") {
  Rng rng(7);
  const Mdp mdp = random_mdp(6, 2, 0.9, rng);
  const TabularPolicy pi = uniform_policy(6, 2);
  const ValueFunctions vf = value_functions(mdp, pi);

  for (int s = 0; s < 6; ++s) {
    double v = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double q = mdp.reward(s, a) + mdp.discount * mdp.transition.row(mdp.sa(s, a)).dot(vf.v);
      CHECK(vf.q(s, a) == doctest::Approx(q).epsilon(1e-12));
      v += pi.probs(s, a) * vf.q(s, a);
    }
    CHECK(vf.v[s] == doctest::Approx(v).epsilon(1e-12));
    // Advantage has zero mean under the policy.
    CHECK(pi.probs.row(s).dot(vf.advantage.row(s)) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("performance equals the occupancy inner product and the value form") {
  const Mdp mdp = two_state_mdp();
  const TabularPolicy pi = uniform_policy(2, 2);
  const OccupancyMeasure mu = occupancy(mdp, pi);
  const double j = performance(mdp, pi);
  CHECK(j == doctest::Approx((mdp.reward.array() * mu.weights.array()).sum()).epsilon(1e-12));
  const ValueFunctions vf = value_functions(mdp, pi);
  CHECK(j == doctest::Approx((1.0 - mdp.discount) * mdp.initial_dist.dot(vf.v)).epsilon(1e-12));
}

TEST_CASE("discounted operator with the reward table reproduces Q") {
  Rng rng(11);
  const Mdp mdp = random_mdp(5, 3, 0.9, rng);
  const TabularPolicy pi = uniform_policy(5, 3);
  const ValueFunctions vf = value_functions(mdp, pi);
  const MatrixXd q = discounted_operator(mdp, pi, mdp.reward);
  CHECK((q - vf.q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("value iteration beats every deterministic policy on a small MDP") {
  const Mdp mdp = two_state_mdp();
  const double j_star = optimal_performance(mdp);
  double best = -1e9;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1) {
      TabularPolicy pi = uniform_policy(2, 2);
      pi.probs.setZero();
      pi.probs(0, a0) = 1.0;
      pi.probs(1, a1) = 1.0;
      best = std::max(best, performance(mdp, pi));
    }
  CHECK(j_star == doctest::Approx(best).epsilon(1e-10));

  const TabularPolicy greedy = greedy_policy(mdp, value_iteration(mdp));
  CHECK(performance(mdp, greedy) == doctest::Approx(j_star).epsilon(1e-10));
}

TEST_CASE("text serialization round-trips exactly") {
  Rng rng(13);
  const Mdp mdp = random_mdp(4, 2, 0.97, rng);
  const Mdp back = mdp_from_text(mdp_to_text(mdp));
  CHECK(back.num_states == mdp.num_states);
  CHECK(back.num_actions == mdp.num_actions);
  CHECK(back.discount == mdp.discount);
  CHECK((back.transition - mdp.transition).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.reward - mdp.reward).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.initial_dist - mdp.initial_dist).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(mdp_from_text("not an mdp"), std::invalid_argument);
}
