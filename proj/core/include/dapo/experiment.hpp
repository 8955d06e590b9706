#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

#include "dapo/env.hpp"
#include "dapo/learner.hpp"
#include "dapo/replay.hpp"

namespace dapo {

enum class ExecutionMode { SequentialDeterministic, Concurrent };

struct ExperimentConfig {
  std::string env_name = "chain:10";
  DapoConfig dapo;
  ModelKind model = ModelKind::TabularSoftmax;
  int num_actors = 4;
  unsigned long seed = 1;
  ExecutionMode mode = ExecutionMode::SequentialDeterministic;
  // Data-scarce knob: how many times each generated sample is trained on
  // average (the learner consumes snapshot_period * batch_size records per
  // iteration; actors generate that amount divided by this ratio).
  double train_generate_ratio = 400.0 / 60.0;
};

struct MetricsRow {
  int iteration = 0;
  long env_steps = 0;
  long samples_trained = 0;
  double exact_j = 0.0;
  double mc_return = 0.0;
  double mean_kl = 0.0;
  double mean_entropy = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

// One actor: owns its environment cursor and RNG, generates rollouts under
// published snapshots and hands complete episodes to replay.
class Actor {
 public:
  Actor(const Environment& env, int actor_id, unsigned long seed);

  Rollout generate(const PolicySnapshot& snapshot, int length, ReplayMemory& replay);
  long steps_generated() const { return steps_generated_.load(std::memory_order_relaxed); }
  // Undiscounted returns of episodes completed since the last drain.
  std::vector<double> drain_completed_returns();

 private:
  void finish_episode(ReplayMemory& replay, bool terminated, int final_state);

  const Environment& env_;
  int actor_id_;
  Rng rng_;
  int state_ = 0;
  int episode_steps_ = 0;
  double episode_return_ = 0.0;
  bool episode_open_ = false;
  Episode current_;
  std::vector<double> completed_returns_;
  // Read by the metrics thread while the actor thread advances it.
  std::atomic<long> steps_generated_{0};
};

// Runs the full actor/replay/learner loop and returns one metrics row per
// outer iteration (plus the initial evaluation).
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

// Fixed header, 9 significant digits, LF line endings.
void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

// (proposed - baseline) / (max(human, baseline) - random).
double relative_score(double proposed, double baseline, double human, double random);

// Flat "key = value" config file; unknown keys are errors.
void apply_config_file(const std::string& path, ExperimentConfig& cfg);
void apply_config_text(const std::string& text, ExperimentConfig& cfg);

}  // namespace dapo
