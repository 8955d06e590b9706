#include "dapo/replay.hpp"

namespace dapo {

ReplayMemory::ReplayMemory(int num_actors, int sample_capacity, int max_episodes_per_actor)
    : queues_(num_actors),
      sample_capacity_(sample_capacity),
      max_episodes_per_actor_(max_episodes_per_actor) {
  if (num_actors <= 0) throw std::invalid_argument("ReplayMemory: need at least one actor");
  if (sample_capacity <= 0 || max_episodes_per_actor <= 0)
    throw std::invalid_argument("ReplayMemory: capacities must be positive");
}

void ReplayMemory::append(int actor_id, Episode episode) {
  if (actor_id < 0 || actor_id >= static_cast<int>(queues_.size()))
    throw std::invalid_argument("ReplayMemory: actor id out of range");
  if (episode.steps.empty()) throw std::invalid_argument("ReplayMemory: empty episode");
  std::lock_guard lock(mutex_);
  auto& queue = queues_[actor_id];
  total_steps_ += static_cast<long>(episode.steps.size());
  queue.push_back(std::make_shared<const Episode>(std::move(episode)));
  while (static_cast<int>(queue.size()) > max_episodes_per_actor_ ||
         (total_steps_ > sample_capacity_ && queue.size() > 1)) {
    total_steps_ -= static_cast<long>(queue.front()->steps.size());
    queue.pop_front();
  }
}

ReplayMemory::SampleRef ReplayMemory::sample(Rng& rng) const {
  std::lock_guard lock(mutex_);
  if (total_steps_ == 0) throw std::runtime_error("ReplayMemory: sampling from empty memory");
  std::uniform_int_distribution<long> dist(0, total_steps_ - 1);
  long k = dist(rng);
  for (const auto& queue : queues_) {
    for (const auto& episode : queue) {
      const long n = static_cast<long>(episode->steps.size());
      if (k < n) return {episode, static_cast<int>(k)};
      k -= n;
    }
  }
  throw std::logic_error("ReplayMemory: step accounting out of sync");
}

long ReplayMemory::total_steps() const {
  std::lock_guard lock(mutex_);
  return total_steps_;
}

int ReplayMemory::episode_count(int actor_id) const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(queues_.at(actor_id).size());
}

int ReplayMemory::total_episodes() const {
  std::lock_guard lock(mutex_);
  int n = 0;
  for (const auto& queue : queues_) n += static_cast<int>(queue.size());
  return n;
}

}  // namespace dapo
