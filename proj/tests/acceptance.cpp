// End-to-end acceptance checks, one pass/fail line each. Exits nonzero when
// any check fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dapo/experiment.hpp"
#include "dapo/mirror.hpp"
#include "dapo/verification.hpp"

using namespace dapo;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

// 1. Analytic occupancy-gradient identity vs central finite differences.
Outcome check_policy_gradient_identity() {
  Rng rng(101);
  std::uniform_int_distribution<int> state_dist(2, 6);
  std::uniform_int_distribution<int> action_dist(2, 4);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int ns = state_dist(rng);
    const int na = action_dist(rng);
    const Mdp mdp = random_mdp(ns, na, 0.9, rng);
    const PolicyParameters theta = random_tabular_policy(ns, na, rng);
    MatrixXd f(ns, na);
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a) f(s, a) = unif(rng);
    worst = std::max(worst, pg_theorem_check(mdp, theta, f));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g", worst);
  return {worst < 1e-4, buf};
}

// 2. Gradient-bias bound with exactly computed constants.
Outcome check_bias_bound() {
  Rng rng(103);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const Mdp mdp = random_mdp(4, 3, 0.9, rng);
    const PolicyParameters theta = random_tabular_policy(4, 3, rng);
    const PolicyParameters theta_tilde = random_tabular_policy(4, 3, rng);
    if (!bias_bound_check(mdp, theta, theta_tilde, 0.5).satisfied) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations out of 100 pairs"};
}

// 3. On-policy value targets against a forward n-step return oracle.
Outcome check_vtrace_on_policy() {
  Rng rng(107);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::uniform_real_distribution<double> prob(0.05, 1.0);
  std::uniform_real_distribution<double> trunc(1.0, 3.0);
  std::uniform_int_distribution<int> length(1, 40);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = length(rng);
    Rollout rollout;
    for (int j = 0; j < n; ++j) {
      Step step;
      step.reward = reward(rng);
      step.behavior_prob = prob(rng);
      step.terminal = (j == n - 1) && trial % 4 == 0;
      rollout.steps.push_back(step);
    }
    std::vector<double> target(n), values(n + 1);
    for (int j = 0; j < n; ++j) target[j] = rollout.steps[j].behavior_prob;
    for (int j = 0; j <= n; ++j) values[j] = reward(rng);
    TraceConfig cfg;
    cfg.gamma = 0.97;
    cfg.c_bar_v = trunc(rng);
    cfg.rho_bar_v = trunc(rng);
    const std::vector<double> v = vtrace_values(rollout, target, values, cfg);
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      double discount = 1.0;
      bool cut = false;
      for (int l = j; l < n; ++l) {
        acc += discount * rollout.steps[l].reward;
        discount *= cfg.gamma;
        if (rollout.steps[l].terminal) {
          cut = true;
          break;
        }
      }
      if (!cut) acc += discount * values[n];
      worst = std::max(worst, std::abs(v[j] - acc));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max deviation %.3g over 1000 rollouts", worst);
  return {worst < 1e-12, buf};
}

// 4. Multi-step divergence: exactness of the degenerate cases and an
// unbiasedness check against the exact discounted operator.
Outcome check_multistep_divergence() {
  Rng rng(109);
  const int ns = 4, na = 3;
  const double gamma = 0.9;
  const int horizon = 60;
  const Mdp mdp = random_mdp(ns, na, gamma, rng);
  const TabularPolicy pi = policy_table(random_tabular_policy(ns, na, rng));
  const TabularPolicy pi_t = policy_table(random_tabular_policy(ns, na, rng));

  // Degenerate cases first.
  {
    Rollout rollout;
    std::vector<double> target, behavior;
    int s = 0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int j = 0; j < 20; ++j) {
      const int a = j % na;
      Step step;
      step.state = s;
      step.action = a;
      step.behavior_prob = pi_t.probs(s, a);
      rollout.steps.push_back(step);
      target.push_back(pi_t.probs(s, a));
      behavior.push_back(pi_t.probs(s, a));
      s = (s + 1) % ns;
    }
    const auto f = f_terms(rollout, target, behavior, FTermSpec{});
    TraceConfig cfg;
    cfg.gamma = gamma;
    for (double d : multistep_divergence(rollout, f, target, cfg))
      if (std::abs(d) > 1e-15) return {false, "on-policy divergence estimate not zero"};
    std::vector<double> off_target(target);
    for (double& p : off_target) p *= 0.5;
    const auto f2 = f_terms(rollout, off_target, behavior, FTermSpec{});
    cfg.c_bar_d = 0.0;
    const auto d2 = multistep_divergence(rollout, f2, off_target, cfg);
    for (size_t j = 0; j < d2.size(); ++j)
      if (d2[j] != f2[j]) return {false, "one-step collapse with c_bar = 0 is not exact"};
  }

  // Monte-Carlo estimate started from mu_t against Q^pi(f) in expectation.
  MatrixXd f_table(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      f_table(s, a) = std::log(pi.probs(s, a)) - std::log(pi_t.probs(s, a));
  const MatrixXd q_f = discounted_operator(mdp, pi, f_table);
  const OccupancyMeasure mu_t = occupancy(mdp, pi_t);
  double exact = (mu_t.weights.array() * q_f.array()).sum();

  // Flattened cumulative tables for fast ancestral sampling.
  std::vector<double> cum_next(ns * na * ns), cum_action(ns * na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      double acc = 0.0;
      for (int sp = 0; sp < ns; ++sp) {
        acc += mdp.transition(mdp.sa(s, a), sp);
        cum_next[(s * na + a) * ns + sp] = acc;
      }
      cum_action[s * na + a] = (a == 0 ? 0.0 : cum_action[s * na + a - 1]) + pi_t.probs(s, a);
    }
  std::vector<double> cum_start(ns * na);
  double acc0 = 0.0;
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      acc0 += mu_t.weights(s, a);
      cum_start[s * na + a] = acc0;
    }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto pick = [&](const double* cum, int count, double norm) {
    const double u = unif(rng) * norm;
    for (int i = 0; i < count; ++i)
      if (u < cum[i]) return i;
    return count - 1;
  };

  TraceConfig cfg;
  cfg.gamma = gamma;
  cfg.c_bar_d = 1e9;  // unbiasedness requires inactive truncation
  cfg.rho_bar_d = 1e9;
  const long num_samples = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  Rollout rollout;
  rollout.steps.resize(horizon);
  std::vector<double> target(horizon), behavior(horizon);
  for (long i = 0; i < num_samples; ++i) {
    int sa = pick(cum_start.data(), ns * na, cum_start.back());
    int s = sa / na, a = sa % na;
    for (int j = 0; j < horizon; ++j) {
      Step& step = rollout.steps[j];
      step.state = s;
      step.action = a;
      step.behavior_prob = pi_t.probs(s, a);
      target[j] = pi.probs(s, a);
      behavior[j] = step.behavior_prob;
      s = pick(&cum_next[(s * na + a) * ns], ns, 1.0);
      a = pick(&cum_action[s * na], na, cum_action[s * na + na - 1]);
    }
    const auto f = f_terms(rollout, target, behavior, FTermSpec{});
    const double d0 = multistep_divergence(rollout, f, target, cfg)[0];
    sum += d0;
    sum_sq += d0 * d0;
  }
  const double mean = sum / num_samples;
  const double variance = std::max(0.0, sum_sq / num_samples - mean * mean);
  const double sigma = std::sqrt(variance / num_samples);
  const double tail = std::pow(gamma, horizon) * f_table.cwiseAbs().maxCoeff() / (1.0 - gamma);
  const double gap = std::abs(mean - exact);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "|mean - exact| = %.3g vs 3*sigma + tail = %.3g", gap,
                3.0 * sigma + tail);
  return {gap <= 3.0 * sigma + tail, buf};
}

// 5. Exact occupancy mirror descent on the 5x5 gridworld.
Outcome check_mirror_descent() {
  const auto env = make_gridworld(5, 5, 0.0, 0.99);
  const Mdp& mdp = env->mdp_view();
  const double j_star = optimal_performance(mdp);
  const auto trace = run_mirror_descent(mdp, 1.0, 500);
  int reached = -1;
  for (size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].performance < trace[i - 1].performance - 1e-9)
      return {false, "objective decreased at iteration " + std::to_string(trace[i].iteration)};
    if (trace[i].residual > 1e-8)
      return {false, "projection residual above 1e-8 at iteration " +
                         std::to_string(trace[i].iteration)};
    if (reached < 0 && trace[i].performance >= j_star - 0.01 * std::abs(j_star))
      reached = trace[i].iteration;
  }
  if (reached < 0) return {false, "did not reach 99% of the optimum in 500 iterations"};
  char buf[128];
  std::snprintf(buf, sizeof(buf), "within 1%% of optimum after %d iterations (J* = %.4g)",
                reached, j_star);
  return {true, buf};
}

ExperimentConfig analogue_config(Algorithm alg, unsigned long seed) {
  ExperimentConfig cfg;
  cfg.env_name = "chain:10";
  cfg.seed = seed;
  cfg.dapo.algorithm = alg;
  cfg.dapo.batch_size = 256;
  cfg.dapo.snapshot_period = 50;
  cfg.dapo.burn_in = 256;
  cfg.dapo.total_iterations = 150;
  cfg.train_generate_ratio = 400.0 / 60.0;
  return cfg;
}

// 6. Algorithm reduction identities, byte-for-byte.
Outcome check_reductions() {
  ExperimentConfig da = analogue_config(Algorithm::PpoDa, 5);
  da.dapo.total_iterations = 5;
  ExperimentConfig ppo = da;
  ppo.dapo.algorithm = Algorithm::Ppo;
  ExperimentConfig da_zero = da;
  da_zero.dapo.one_over_eta = 0.0;
  if (metrics_to_csv(run_experiment(da_zero)) != metrics_to_csv(run_experiment(ppo)))
    return {false, "augmented run with zero regularizer differs from the plain baseline"};

  ExperimentConfig one_step = da;
  one_step.dapo.algorithm = Algorithm::PpoDa1Step;
  ExperimentConfig da_cut = da;
  da_cut.dapo.trace.c_bar_d = 0.0;
  if (metrics_to_csv(run_experiment(one_step)) != metrics_to_csv(run_experiment(da_cut)))
    return {false, "one-step variant differs from the truncated multi-step run"};
  return {true, "both reduction pairs byte-identical"};
}

// 7. Data-scarce advantage of divergence augmentation on the chain task.
Outcome check_chain_analogue() {
  const auto env = make_environment("chain:10");
  const double j_star = optimal_performance(env->mdp_view());
  const double j_random = performance(env->mdp_view(), uniform_policy(10, 2));

  auto median_final = [&](Algorithm alg) {
    std::vector<double> finals;
    for (unsigned long seed = 1; seed <= 5; ++seed)
      finals.push_back(run_experiment(analogue_config(alg, seed)).back().exact_j);
    std::sort(finals.begin(), finals.end());
    return finals[finals.size() / 2];
  };
  const double j_da = median_final(Algorithm::PpoDa);
  const double j_ppo = median_final(Algorithm::Ppo);
  const double score = relative_score(j_da, j_ppo, j_star, j_random);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "median J: augmented %.4g vs baseline %.4g, relative score %.3g "
                "(directional check, not a large-scale reproduction)",
                j_da, j_ppo, score);
  return {j_da >= j_ppo && score >= 0.0, buf};
}

// 8. Default configuration against the reference fixture.
Outcome check_config_fidelity() {
  std::ifstream in(std::string(DAPO_TEST_DATA_DIR) + "/reference_defaults.txt");
  if (!in) return {false, "missing reference fixture"};
  const DapoConfig defaults;
  std::map<std::string, double> actual{
      {"one_over_eta", defaults.one_over_eta},
      {"lambda", defaults.trace.lambda_v},
      {"batch_size", static_cast<double>(defaults.batch_size)},
      {"rollout_length", static_cast<double>(defaults.rollout_length)},
      {"replay_size", static_cast<double>(defaults.replay_capacity)},
      {"burn_in", static_cast<double>(defaults.burn_in)},
      {"c_bar_d", defaults.trace.c_bar_d},
      {"rho_bar_d", defaults.trace.rho_bar_d},
      {"c_bar_v", defaults.trace.c_bar_v},
      {"rho_bar_v", defaults.trace.rho_bar_v},
      {"epsilon", defaults.clip_eps},
      {"b", defaults.loss_mix},
      {"gamma", defaults.trace.gamma},
      {"snapshot_period", static_cast<double>(defaults.snapshot_period)},
      {"learning_rate", defaults.learning_rate},
  };
  std::string line;
  int matched = 0;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    const double value = std::stod(line.substr(eq + 1));
    const auto it = actual.find(key);
    if (it == actual.end()) return {false, "fixture key '" + key + "' has no config field"};
    if (it->second != value)
      return {false, "field '" + key + "' differs from the reference value"};
    ++matched;
  }
  return {matched == static_cast<int>(actual.size()),
          std::to_string(matched) + " fields match the reference fixture"};
}

// 9. Sequential-mode determinism.
Outcome check_determinism() {
  ExperimentConfig cfg = analogue_config(Algorithm::PpoDa, 42);
  cfg.dapo.total_iterations = 20;
  const std::string first = metrics_to_csv(run_experiment(cfg));
  const std::string second = metrics_to_csv(run_experiment(cfg));
  if (first != second) return {false, "repeated runs emitted different CSV bytes"};
  return {true, "identical CSV across repeated runs (" + std::to_string(first.size()) + " bytes)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"policy gradient identity on random tabular problems", check_policy_gradient_identity},
      {"gradient-bias bound with exact constants", check_bias_bound},
      {"on-policy value targets equal n-step returns", check_vtrace_on_policy},
      {"multi-step divergence degenerate cases and unbiasedness", check_multistep_divergence},
      {"exact mirror descent solves the 5x5 gridworld", check_mirror_descent},
      {"algorithm reduction identities are byte-exact", check_reductions},
      {"divergence augmentation helps on the data-scarce chain", check_chain_analogue},
      {"default configuration matches the reference fixture", check_config_fidelity},
      {"sequential runs are deterministic", check_determinism},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& criterion : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s - %s [%s] (%.1fs)\n", index,
                outcome.passed ? "PASS" : "FAIL", criterion.name, outcome.detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!outcome.passed) ++failures;
  }
  if (failures == 0)
    std::printf("all %d acceptance criteria passed\n", index);
  else
    std::printf("%d of %d acceptance criteria FAILED\n", failures, index);
  return failures == 0 ? 0 : 1;
}
