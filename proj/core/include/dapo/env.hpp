#pragma once

#include <memory>
#include <string>

#include "dapo/common.hpp"
#include "dapo/mdp.hpp"

namespace dapo {

// Synthetic tabular environment with an exact MDP view. Sampling and the
// tabular view share the same transition/reward tables by construction.
class Environment {
 public:
  struct StepResult {
    int next_state = 0;
    double reward = 0.0;
    bool terminal = false;
  };

  virtual ~Environment() = default;
  virtual int reset(Rng& rng) const = 0;
  virtual StepResult step(int state, int action, Rng& rng) const = 0;
  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual const Mdp& mdp_view() const = 0;
  // Episodes are force-terminated after this many steps (bootstrapped, not
  // flagged terminal).
  virtual int episode_cap() const = 0;
  virtual const std::string& name() const = 0;
};

// Deep-sea-style chain: n states, 2 actions. Action 1 advances right with a
// -0.01/n step penalty and pays 1.0 on reaching the last state; action 0
// terminates immediately with reward 0.001.
std::unique_ptr<Environment> make_chain(int n, double gamma = 0.99);

// 4-action gridworld, goal reward 1 at the far corner, step cost 0.01, slip
// probability of moving in a random unintended direction.
std::unique_ptr<Environment> make_gridworld(int width, int height, double slip,
                                            double gamma = 0.99);

// Gridworld variant with a -1 terminal cliff strip along the bottom row
// between start and goal.
std::unique_ptr<Environment> make_cliff(int width, int height, double gamma = 0.99);

// Parses "chain:10", "grid:5x5", "grid:5x5:0.1", "cliff:4x3".
std::unique_ptr<Environment> make_environment(const std::string& spec, double gamma = 0.99);

}  // namespace dapo
