#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dapo/experiment.hpp"
#include "dapo/verification.hpp"

namespace {

int run_command(const std::string& env_name, const std::string& algo, unsigned long seed,
                int iters, const std::string& out_path, const std::string& mode,
                const std::string& config_path) {
  dapo::ExperimentConfig cfg;
  cfg.env_name = env_name;
  cfg.seed = seed;
  cfg.dapo.algorithm = dapo::algorithm_from_name(algo);
  cfg.dapo.total_iterations = iters;
  if (cfg.dapo.algorithm == dapo::Algorithm::PpoEntropy)
    cfg.dapo.one_over_eta = 0.1;  // entropy-bonus coefficient default
  if (mode == "seq") cfg.mode = dapo::ExecutionMode::SequentialDeterministic;
  else if (mode == "conc") cfg.mode = dapo::ExecutionMode::Concurrent;
  else throw std::invalid_argument("mode must be seq or conc");
  if (!config_path.empty()) dapo::apply_config_file(config_path, cfg);

  const std::vector<dapo::MetricsRow> rows = dapo::run_experiment(cfg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  dapo::write_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_path
            << " (final exact J = " << rows.back().exact_j << ")\n";
  return 0;
}

int oracle_command(const std::string& env_name) {
  const auto env = dapo::make_environment(env_name);
  const dapo::Mdp& mdp = env->mdp_view();
  const dapo::VectorXd v = dapo::value_iteration(mdp);
  const dapo::TabularPolicy greedy = dapo::greedy_policy(mdp, v);
  std::cout << env->name() << ": " << mdp.num_states << " states, " << mdp.num_actions
            << " actions, gamma " << mdp.discount << "\n";
  std::cout << "optimal normalized performance J* = " << dapo::optimal_performance(mdp) << "\n";
  std::cout << "uniform-policy performance J = "
            << dapo::performance(mdp, dapo::uniform_policy(mdp.num_states, mdp.num_actions))
            << "\n";
  std::cout << "optimal policy (state: action):\n";
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    greedy.probs.row(s).maxCoeff(&best);
    std::cout << "  " << s << ": " << best << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divergence-augmented policy optimization laboratory"};
  app.require_subcommand(1);

  std::string env_name = "chain:10";
  std::string algo = "ppo-da";
  unsigned long seed = 1;
  int iters = 200;
  std::string out_path = "results.csv";
  std::string mode = "seq";
  std::string config_path;

  CLI::App* run = app.add_subcommand("run", "train a policy and write per-iteration metrics");
  run->add_option("--env", env_name, "environment spec, e.g. chain:10 or grid:5x5");
  run->add_option("--algo", algo, "pg-dapo | ppo | ppo-da | ppo-da-1step | ppo-entropy");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--iters", iters, "outer iterations");
  run->add_option("--out", out_path, "output CSV path");
  run->add_option("--mode", mode, "seq (deterministic) or conc (threaded actors)");
  run->add_option("--config", config_path, "key = value config file");

  std::string oracle_env = "grid:5x5";
  CLI::App* oracle = app.add_subcommand("oracle", "print exact solution of an environment");
  oracle->add_option("--env", oracle_env, "environment spec");

  CLI::App* verify = app.add_subcommand("verify", "run the gradient/bound verification suite");

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return run_command(env_name, algo, seed, iters, out_path, mode, config_path);
    if (oracle->parsed()) return oracle_command(oracle_env);
    if (verify->parsed())
      return dapo::print_verification(std::cout, dapo::run_verification()) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
