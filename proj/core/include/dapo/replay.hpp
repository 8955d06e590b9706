#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "dapo/common.hpp"
#include "dapo/policy.hpp"
#include "dapo/trace.hpp"

namespace dapo {

// A complete episode as generated by one actor. `terminated` distinguishes
// environment termination from the episode cap; `final_state` is the
// bootstrap state for capped episodes.
struct Episode {
  std::vector<Step> steps;
  bool terminated = false;
  int final_state = 0;
};

// Per-actor FIFO of complete episodes: at most `max_episodes_per_actor`
// retained per actor, and at most `sample_capacity` steps in total, evicting
// the writing actor's oldest episode first. Thread-safe for one writer per
// actor plus concurrent sampling readers.
class ReplayMemory {
 public:
  explicit ReplayMemory(int num_actors, int sample_capacity = 16384,
                        int max_episodes_per_actor = 20);

  void append(int actor_id, Episode episode);

  struct SampleRef {
    std::shared_ptr<const Episode> episode;
    int index = 0;
  };
  // Uniform with replacement over all retained steps. Throws when empty.
  SampleRef sample(Rng& rng) const;

  long total_steps() const;
  int episode_count(int actor_id) const;
  int total_episodes() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::deque<std::shared_ptr<const Episode>>> queues_;
  int sample_capacity_;
  int max_episodes_per_actor_;
  long total_steps_ = 0;
};

// Immutable policy/value snapshot published by the learner.
struct PolicySnapshot {
  PolicyParameters policy;
  ValueParameters value;
  long version = 0;
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

}  // namespace dapo
