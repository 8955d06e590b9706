#include <doctest.h>

#include "dapo/replay.hpp"

using namespace dapo;

namespace {

Episode make_episode(int length, int tag) {
  Episode episode;
  for (int i = 0; i < length; ++i) {
    Step step;
    step.state = tag;
    step.action = i;
    step.behavior_prob = 0.5;
    episode.steps.push_back(step);
  }
  episode.terminated = true;
  episode.final_state = 0;
  return episode;
}

}  // namespace

TEST_CASE("replay validates construction and appends") {
  CHECK_THROWS_AS(ReplayMemory(0, 100), std::invalid_argument);
  CHECK_THROWS_AS(ReplayMemory(1, 0), std::invalid_argument);
  ReplayMemory mem(2, 100);
  CHECK_THROWS_AS(mem.append(5, make_episode(3, 0)), std::invalid_argument);
  CHECK_THROWS_AS(mem.append(0, Episode{}), std::invalid_argument);
  Rng rng(1);
  CHECK_THROWS_AS(mem.sample(rng), std::runtime_error);
}

TEST_CASE("per-actor FIFO eviction beyond the episode cap") {
  ReplayMemory mem(2, 100000, 20);
  for (int i = 0; i < 25; ++i) mem.append(0, make_episode(2, i));
  CHECK(mem.episode_count(0) == 20);
  CHECK(mem.total_steps() == 40);

  // Oldest five evicted: sampled tags must all be >= 5.
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto ref = mem.sample(rng);
    CHECK(ref.episode->steps[ref.index].state >= 5);
  }

  // The other actor's queue is untouched.
  mem.append(1, make_episode(4, 99));
  CHECK(mem.episode_count(1) == 1);
  CHECK(mem.total_episodes() == 21);
}

TEST_CASE("capacity-based eviction keeps at least the newest episode") {
  ReplayMemory mem(1, 10, 20);
  mem.append(0, make_episode(8, 0));
  mem.append(0, make_episode(8, 1));  // 16 > 10: evicts the first
  CHECK(mem.episode_count(0) == 1);
  CHECK(mem.total_steps() == 8);
  mem.append(0, make_episode(30, 2));  // single oversize episode is retained
  CHECK(mem.episode_count(0) == 1);
  CHECK(mem.total_steps() == 30);
}

TEST_CASE("sampling is uniform over retained steps") {
  ReplayMemory mem(2, 1000, 20);
  mem.append(0, make_episode(10, 0));
  mem.append(1, make_episode(30, 1));
  Rng rng(7);
  const int n = 40000;
  int from_long = 0;
  for (int i = 0; i < n; ++i)
    if (mem.sample(rng).episode->steps[0].state == 1) ++from_long;
  // Expect 3/4 of draws from the 30-step episode; 4-sigma band.
  const double p = 0.75;
  const double sigma = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(from_long) / n - p) < 4.0 * sigma);
}

TEST_CASE("sampled references expose episode positions") {
  ReplayMemory mem(1, 100, 20);
  mem.append(0, make_episode(5, 42));
  Rng rng(9);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 500; ++i) {
    const auto ref = mem.sample(rng);
    REQUIRE(ref.index >= 0);
    REQUIRE(ref.index < 5);
    CHECK(ref.episode->steps[ref.index].action == ref.index);
    seen[ref.index] += 1;
  }
  for (int count : seen) CHECK(count > 0);
}
