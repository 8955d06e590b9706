#include "dapo/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "dapo/divergence.hpp"

namespace dapo {

Actor::Actor(const Environment& env, int actor_id, unsigned long seed)
    : env_(env), actor_id_(actor_id), rng_(seed) {}

void Actor::finish_episode(ReplayMemory& replay, bool terminated, int final_state) {
  current_.terminated = terminated;
  current_.final_state = final_state;
  if (!current_.steps.empty()) replay.append(actor_id_, std::move(current_));
  current_ = Episode{};
  completed_returns_.push_back(episode_return_);
  episode_return_ = 0.0;
  episode_steps_ = 0;
  episode_open_ = false;
}

Rollout Actor::generate(const PolicySnapshot& snapshot, int length, ReplayMemory& replay) {
  if (length < 1) throw std::invalid_argument("actor: rollout length must be >= 1");
  Rollout rollout;
  rollout.steps.reserve(length);
  for (int i = 0; i < length; ++i) {
    if (!episode_open_) {
      state_ = env_.reset(rng_);
      episode_open_ = true;
    }
    const VectorXd pi = action_distribution(snapshot.policy, state_);
    const int action = sample_categorical(pi, rng_);
    const Environment::StepResult result = env_.step(state_, action, rng_);

    Step step;
    step.state = state_;
    step.action = action;
    step.reward = result.reward;
    step.terminal = result.terminal;
    step.behavior_prob = pi[action];
    rollout.steps.push_back(step);
    current_.steps.push_back(step);
    episode_return_ += result.reward;
    episode_steps_ += 1;
    steps_generated_.fetch_add(1, std::memory_order_relaxed);
    state_ = result.next_state;

    if (result.terminal) {
      finish_episode(replay, /*terminated=*/true, result.next_state);
    } else if (episode_steps_ >= env_.episode_cap()) {
      finish_episode(replay, /*terminated=*/false, result.next_state);
    }
  }
  rollout.bootstrap_state = state_;
  return rollout;
}

std::vector<double> Actor::drain_completed_returns() {
  std::vector<double> out;
  out.swap(completed_returns_);
  return out;
}

namespace {

struct EffectiveConfig {
  DapoConfig dapo;
  FTermSpec f_spec;
};

EffectiveConfig resolve(const ExperimentConfig& cfg) {
  EffectiveConfig eff;
  eff.dapo = cfg.dapo;
  eff.f_spec.kind = FTermKind::Kl;
  switch (cfg.dapo.algorithm) {
    case Algorithm::Ppo:
      eff.dapo.one_over_eta = 0.0;  // augmentation vanishes, same code path
      break;
    case Algorithm::PpoDa1Step:
      eff.dapo.trace.c_bar_d = 0.0;
      break;
    case Algorithm::PpoEntropy:
      eff.f_spec.kind = FTermKind::Entropy;
      break;
    default:
      break;
  }
  return eff;
}

// Estimates for one sampled step: the rollout window runs from the sampled
// index to the end of the rollout-length suffix or the episode end.
BatchRecord make_record(const Episode& episode, int index, const DapoConfig& cfg,
                        const FTermSpec& f_spec, const PolicyParameters& pparams,
                        const ValueParameters& vparams) {
  const int end = std::min(index + cfg.rollout_length, static_cast<int>(episode.steps.size()));
  Rollout window;
  window.steps.assign(episode.steps.begin() + index, episode.steps.begin() + end);
  window.bootstrap_state = (end < static_cast<int>(episode.steps.size()))
                               ? episode.steps[end].state
                               : episode.final_state;
  const int n = window.length();
  std::vector<double> target_probs(n), behavior_probs(n), values(n + 1);
  for (int j = 0; j < n; ++j) {
    const Step& step = window.steps[j];
    target_probs[j] = action_distribution(pparams, step.state)[step.action];
    behavior_probs[j] = step.behavior_prob;
    values[j] = value(vparams, step.state);
  }
  values[n] = value(vparams, window.bootstrap_state);

  const std::vector<double> v = vtrace_values(window, target_probs, values, cfg.trace);
  const std::vector<double> a =
      advantage_estimates(window, v, values, cfg.trace.gamma);
  const std::vector<double> f = f_terms(window, target_probs, behavior_probs, f_spec);
  const std::vector<double> d = multistep_divergence(window, f, target_probs, cfg.trace);

  BatchRecord rec;
  rec.state = window.steps[0].state;
  rec.action = window.steps[0].action;
  rec.behavior_prob = window.steps[0].behavior_prob;
  rec.a_hat = a[0];
  rec.d_hat = d[0];
  rec.v_target = v[0];
  return rec;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_kl = 0.0;
  double mean_entropy = 0.0;
};

UpdateStats one_update(const DapoConfig& cfg, const FTermSpec& f_spec, ReplayMemory& replay,
                       Rng& rng, const PolicySnapshot& snapshot, PolicyParameters& pparams,
                       ValueParameters& vparams, OptimizerState& popt, OptimizerState& vopt) {
  Batch batch;
  batch.records.reserve(cfg.batch_size);
  for (int i = 0; i < cfg.batch_size; ++i) {
    const ReplayMemory::SampleRef ref = replay.sample(rng);
    batch.records.push_back(
        make_record(*ref.episode, ref.index, cfg, f_spec, pparams, vparams));
  }

  UpdateStats stats;
  VectorXd pgrad;
  if (cfg.algorithm == Algorithm::PgDapo) {
    pgrad = policy_gradient_dapo(batch, pparams, cfg);
    const double eta = 1.0 / cfg.one_over_eta;
    for (const BatchRecord& rec : batch.records) {
      const double ratio =
          action_distribution(pparams, rec.state)[rec.action] / rec.behavior_prob;
      stats.policy_loss += ratio * (rec.d_hat - eta * rec.a_hat) / batch.records.size();
    }
  } else {
    std::vector<double> advantages(batch.records.size());
    for (size_t i = 0; i < batch.records.size(); ++i)
      advantages[i] = augmented_advantage(batch.records[i].a_hat, batch.records[i].d_hat,
                                          cfg.one_over_eta);
    auto [objective, grad] = ppo_surrogate(batch, pparams, advantages, cfg.clip_eps);
    stats.policy_loss = -objective;
    pgrad = -grad;
  }
  const VectorXd vgrad = value_gradient(batch, pparams, vparams);
  for (const BatchRecord& rec : batch.records) {
    const VectorXd pi = action_distribution(pparams, rec.state);
    const double ratio = pi[rec.action] / rec.behavior_prob;
    const double residual = value(vparams, rec.state) - rec.v_target;
    stats.value_loss += 0.5 * ratio * residual * residual / batch.records.size();
    stats.mean_kl +=
        kl(pi, action_distribution(snapshot.policy, rec.state)) / batch.records.size();
    stats.mean_entropy += -pi.dot(pi.array().log().matrix()) / batch.records.size();
  }
  learner_update(pparams, vparams, pgrad, vgrad, popt, vopt, cfg);
  return stats;
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
  const EffectiveConfig eff = resolve(cfg);
  const DapoConfig& dc = eff.dapo;
  if (cfg.num_actors < 1) throw std::invalid_argument("run_experiment: need at least one actor");
  if (dc.burn_in > dc.replay_capacity)
    throw std::invalid_argument("run_experiment: burn-in exceeds replay capacity");

  const auto env = make_environment(cfg.env_name, dc.trace.gamma);
  const Architecture arch =
      make_architecture(cfg.model, env->num_states(), env->num_actions());

  Rng master(cfg.seed);
  Rng init_rng(master());
  PolicyParameters pparams = make_policy(arch, init_rng);
  ValueParameters vparams = make_value(arch, init_rng);

  const long horizon = static_cast<long>(dc.total_iterations) * dc.snapshot_period;
  OptimizerConfig opt_cfg;
  opt_cfg.alpha0 = dc.learning_rate;
  opt_cfg.horizon = std::max<long>(1, horizon);
  OptimizerState popt = make_optimizer(opt_cfg, pparams.theta.size());
  OptimizerState vopt = make_optimizer(opt_cfg, vparams.phi.size());

  ReplayMemory replay(cfg.num_actors, dc.replay_capacity);
  std::vector<std::unique_ptr<Actor>> actors;
  for (int i = 0; i < cfg.num_actors; ++i)
    actors.push_back(std::make_unique<Actor>(*env, i, master()));
  Rng learner_rng(master());

  std::mutex snapshot_mutex;
  SnapshotPtr snapshot = std::make_shared<const PolicySnapshot>(PolicySnapshot{pparams, vparams, 0});
  auto publish = [&](long version) {
    auto next = std::make_shared<const PolicySnapshot>(PolicySnapshot{pparams, vparams, version});
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(next);
  };
  auto current_snapshot = [&] {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  };

  std::vector<MetricsRow> rows;
  auto exact_j = [&] { return performance(env->mdp_view(), policy_table(pparams)); };
  MetricsRow initial;
  initial.exact_j = exact_j();
  {
    double entropy = 0.0;
    for (int s = 0; s < env->num_states(); ++s) {
      const VectorXd pi = action_distribution(pparams, s);
      entropy += -pi.dot(pi.array().log().matrix()) / env->num_states();
    }
    initial.mean_entropy = entropy;
  }
  rows.push_back(initial);

  const long generate_per_iteration = std::max<long>(
      dc.rollout_length,
      std::llround(static_cast<double>(dc.snapshot_period) * dc.batch_size /
                   cfg.train_generate_ratio));

  long samples_trained = 0;
  double last_mc_return = 0.0;

  // Short-episode environments can saturate the per-actor episode cap below
  // the burn-in threshold, so burn-in also counts generated (possibly
  // evicted) steps.
  long total_generated = 0;
  auto burned_in = [&] {
    return replay.total_steps() >= dc.burn_in || total_generated >= dc.burn_in;
  };

  if (cfg.mode == ExecutionMode::SequentialDeterministic) {
    int next_actor = 0;
    for (int t = 1; t <= dc.total_iterations; ++t) {
      long generated_this = 0;
      while (generated_this < generate_per_iteration || !burned_in()) {
        actors[next_actor]->generate(*current_snapshot(), dc.rollout_length, replay);
        generated_this += dc.rollout_length;
        total_generated += dc.rollout_length;
        next_actor = (next_actor + 1) % cfg.num_actors;
      }
      UpdateStats acc;
      const SnapshotPtr snap = current_snapshot();
      for (int m = 0; m < dc.snapshot_period; ++m) {
        const UpdateStats stats = one_update(dc, eff.f_spec, replay, learner_rng, *snap,
                                             pparams, vparams, popt, vopt);
        samples_trained += dc.batch_size;
        acc.policy_loss += stats.policy_loss / dc.snapshot_period;
        acc.value_loss += stats.value_loss / dc.snapshot_period;
        acc.mean_kl += stats.mean_kl / dc.snapshot_period;
        acc.mean_entropy += stats.mean_entropy / dc.snapshot_period;
      }
      publish(t);

      MetricsRow row;
      row.iteration = t;
      long env_steps = 0;
      std::vector<double> returns;
      for (auto& actor : actors) {
        env_steps += actor->steps_generated();
        for (double r : actor->drain_completed_returns()) returns.push_back(r);
      }
      if (!returns.empty()) {
        double sum = 0.0;
        for (double r : returns) sum += r;
        last_mc_return = sum / returns.size();
      }
      row.env_steps = env_steps;
      row.samples_trained = samples_trained;
      row.exact_j = exact_j();
      row.mc_return = last_mc_return;
      row.mean_kl = acc.mean_kl;
      row.mean_entropy = acc.mean_entropy;
      row.policy_loss = acc.policy_loss;
      row.value_loss = acc.value_loss;
      rows.push_back(row);
    }
    return rows;
  }

  // Concurrent mode: free-running actor threads against published snapshots.
  std::atomic<bool> stop{false};
  std::vector<std::thread> threads;
  std::mutex returns_mutex;
  std::vector<double> shared_returns;
  for (auto& actor : actors) {
    threads.emplace_back([&, a = actor.get()] {
      while (!stop.load(std::memory_order_relaxed)) {
        a->generate(*current_snapshot(), dc.rollout_length, replay);
        auto done = a->drain_completed_returns();
        if (!done.empty()) {
          std::lock_guard lock(returns_mutex);
          shared_returns.insert(shared_returns.end(), done.begin(), done.end());
        }
      }
    });
  }
  auto generated_total = [&] {
    long n = 0;
    for (auto& actor : actors) n += actor->steps_generated();
    return n;
  };
  while (replay.total_steps() < dc.burn_in && generated_total() < dc.burn_in)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  for (int t = 1; t <= dc.total_iterations; ++t) {
    UpdateStats acc;
    const SnapshotPtr snap = current_snapshot();
    for (int m = 0; m < dc.snapshot_period; ++m) {
      const UpdateStats stats = one_update(dc, eff.f_spec, replay, learner_rng, *snap, pparams,
                                           vparams, popt, vopt);
      samples_trained += dc.batch_size;
      acc.policy_loss += stats.policy_loss / dc.snapshot_period;
      acc.value_loss += stats.value_loss / dc.snapshot_period;
      acc.mean_kl += stats.mean_kl / dc.snapshot_period;
      acc.mean_entropy += stats.mean_entropy / dc.snapshot_period;
    }
    publish(t);
    MetricsRow row;
    row.iteration = t;
    long env_steps = 0;
    for (auto& actor : actors) env_steps += actor->steps_generated();
    {
      std::lock_guard lock(returns_mutex);
      if (!shared_returns.empty()) {
        double sum = 0.0;
        for (double r : shared_returns) sum += r;
        last_mc_return = sum / shared_returns.size();
        shared_returns.clear();
      }
    }
    row.env_steps = env_steps;
    row.samples_trained = samples_trained;
    row.exact_j = exact_j();
    row.mc_return = last_mc_return;
    row.mean_kl = acc.mean_kl;
    row.mean_entropy = acc.mean_entropy;
    row.policy_loss = acc.policy_loss;
    row.value_loss = acc.value_loss;
    rows.push_back(row);
  }
  stop.store(true);
  for (auto& thread : threads) thread.join();
  return rows;
}

namespace {

void append_value(std::string& out, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  out += buf;
}

}  // namespace

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out =
      "iteration,env_steps,samples_trained,exact_j,mc_return,mean_kl,mean_entropy,"
      "policy_loss,value_loss\n";
  for (const MetricsRow& row : rows) {
    out += std::to_string(row.iteration);
    out += ',';
    out += std::to_string(row.env_steps);
    out += ',';
    out += std::to_string(row.samples_trained);
    out += ',';
    append_value(out, row.exact_j);
    out += ',';
    append_value(out, row.mc_return);
    out += ',';
    append_value(out, row.mean_kl);
    out += ',';
    append_value(out, row.mean_entropy);
    out += ',';
    append_value(out, row.policy_loss);
    out += ',';
    append_value(out, row.value_loss);
    out += '\n';
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_to_csv(rows);
}

double relative_score(double proposed, double baseline, double human, double random) {
  const double denom = std::max(human, baseline) - random;
  if (denom == 0.0) throw std::invalid_argument("relative_score: zero denominator");
  return (proposed - baseline) / denom;
}

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace

void apply_config_text(const std::string& text, ExperimentConfig& cfg) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected 'key = value' in line: " + line);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    DapoConfig& dc = cfg.dapo;
    if (key == "batch_size") dc.batch_size = std::stoi(value);
    else if (key == "replay_size") dc.replay_capacity = std::stoi(value);
    else if (key == "lambda") dc.trace.lambda_v = std::stod(value);
    else if (key == "rollout_length") dc.rollout_length = std::stoi(value);
    else if (key == "burn_in") dc.burn_in = std::stoi(value);
    else if (key == "learning_rate") dc.learning_rate = std::stod(value);
    else if (key == "c_bar_d") dc.trace.c_bar_d = std::stod(value);
    else if (key == "rho_bar_d") dc.trace.rho_bar_d = std::stod(value);
    else if (key == "c_bar_v") dc.trace.c_bar_v = std::stod(value);
    else if (key == "rho_bar_v") dc.trace.rho_bar_v = std::stod(value);
    else if (key == "epsilon") dc.clip_eps = std::stod(value);
    else if (key == "one_over_eta") dc.one_over_eta = std::stod(value);
    else if (key == "b") dc.loss_mix = std::stod(value);
    else if (key == "gamma") dc.trace.gamma = std::stod(value);
    else if (key == "snapshot_period") dc.snapshot_period = std::stoi(value);
    else if (key == "total_iterations") dc.total_iterations = std::stoi(value);
    else if (key == "actors") cfg.num_actors = std::stoi(value);
    else if (key == "train_generate_ratio") cfg.train_generate_ratio = std::stod(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(buffer.str(), cfg);
}

}  // namespace dapo
