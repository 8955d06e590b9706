#include "dapo/env.hpp"

#include <sstream>
#include <vector>

namespace dapo {

namespace {

// Shared implementation: all bundled environments are tabular. The realized
// step reward is base(s,a) + entry_bonus(s'); the MDP view stores its
// expectation over s'.
class TabularEnv final : public Environment {
 public:
  TabularEnv(std::string name, Mdp mdp, MatrixXd base_reward, VectorXd entry_bonus,
             std::vector<bool> terminal, int cap)
      : name_(std::move(name)),
        mdp_(std::move(mdp)),
        base_reward_(std::move(base_reward)),
        entry_bonus_(std::move(entry_bonus)),
        terminal_(std::move(terminal)),
        cap_(cap) {
    for (int s = 0; s < mdp_.num_states; ++s)
      for (int a = 0; a < mdp_.num_actions; ++a)
        mdp_.reward(s, a) =
            base_reward_(s, a) + mdp_.transition.row(mdp_.sa(s, a)).dot(entry_bonus_);
    validate_mdp(mdp_);
  }

  int reset(Rng& rng) const override { return sample_categorical(mdp_.initial_dist, rng); }

  StepResult step(int state, int action, Rng& rng) const override {
    if (state < 0 || state >= mdp_.num_states || action < 0 || action >= mdp_.num_actions)
      throw std::invalid_argument("step: state/action out of range");
    const int next =
        sample_categorical(mdp_.transition.row(mdp_.sa(state, action)).transpose(), rng);
    return {next, base_reward_(state, action) + entry_bonus_[next], terminal_[next]};
  }

  int num_states() const override { return mdp_.num_states; }
  int num_actions() const override { return mdp_.num_actions; }
  const Mdp& mdp_view() const override { return mdp_; }
  int episode_cap() const override { return cap_; }
  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  Mdp mdp_;
  MatrixXd base_reward_;
  VectorXd entry_bonus_;
  std::vector<bool> terminal_;
  int cap_;
};

}  // namespace

std::unique_ptr<Environment> make_chain(int n, double gamma) {
  if (n < 2) throw std::invalid_argument("make_chain: need n >= 2");
  // States 0..n-2 are chain positions, state n-1 the absorbing sink.
  const int num_states = n;
  const int sink = n - 1;
  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = 2;
  mdp.discount = gamma;
  mdp.transition = MatrixXd::Zero(num_states * 2, num_states);
  mdp.reward = MatrixXd::Zero(num_states, 2);
  mdp.initial_dist = VectorXd::Zero(num_states);
  mdp.initial_dist[0] = 1.0;

  MatrixXd base = MatrixXd::Zero(num_states, 2);
  const double step_penalty = -0.01 / n;
  for (int s = 0; s < sink; ++s) {
    // Action 0: bail out for a token reward. Action 1: advance right.
    mdp.transition(mdp.sa(s, 0), sink) = 1.0;
    base(s, 0) = 0.001;
    if (s + 1 < sink) {
      mdp.transition(mdp.sa(s, 1), s + 1) = 1.0;
      base(s, 1) = step_penalty;
    } else {
      mdp.transition(mdp.sa(s, 1), sink) = 1.0;
      base(s, 1) = 1.0 + step_penalty;
    }
  }
  for (int a = 0; a < 2; ++a) mdp.transition(mdp.sa(sink, a), sink) = 1.0;

  std::vector<bool> terminal(num_states, false);
  terminal[sink] = true;
  return std::make_unique<TabularEnv>("chain:" + std::to_string(n), std::move(mdp),
                                      std::move(base), VectorXd::Zero(num_states),
                                      std::move(terminal), n);
}

namespace {

std::unique_ptr<Environment> make_grid_impl(const std::string& name, int width, int height,
                                            double slip, bool cliff, double gamma) {
  if (width < 2 || height < 2) throw std::invalid_argument("gridworld: dimensions must be >= 2");
  if (slip < 0.0 || slip > 0.5) throw std::invalid_argument("gridworld: slip must be in [0, 0.5]");
  const int cells = width * height;
  const int sink = cells;
  const int num_states = cells + 1;
  const int num_actions = 4;
  auto cell = [width](int x, int y) { return y * width + x; };
  const int start = cell(0, 0);
  const int goal = cliff ? cell(width - 1, 0) : cell(width - 1, height - 1);

  std::vector<bool> terminal(num_states, false);
  VectorXd bonus = VectorXd::Zero(num_states);
  terminal[sink] = true;
  terminal[goal] = true;
  bonus[goal] = 1.0;
  if (cliff) {
    for (int x = 1; x < width - 1; ++x) {
      terminal[cell(x, 0)] = true;
      bonus[cell(x, 0)] = -1.0;
    }
  }

  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = gamma;
  mdp.transition = MatrixXd::Zero(num_states * num_actions, num_states);
  mdp.reward = MatrixXd::Zero(num_states, num_actions);
  mdp.initial_dist = VectorXd::Zero(num_states);
  mdp.initial_dist[start] = 1.0;

  MatrixXd base = MatrixXd::Zero(num_states, num_actions);
  const int dx[4] = {0, 1, 0, -1};
  const int dy[4] = {1, 0, -1, 0};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int s = cell(x, y);
      if (terminal[s]) {
        for (int a = 0; a < num_actions; ++a) mdp.transition(mdp.sa(s, a), sink) = 1.0;
        continue;
      }
      for (int a = 0; a < num_actions; ++a) {
        base(s, a) = -0.01;
        for (int dir = 0; dir < num_actions; ++dir) {
          const double p = (dir == a) ? 1.0 - slip : slip / 3.0;
          if (p == 0.0) continue;
          const int nx = std::clamp(x + dx[dir], 0, width - 1);
          const int ny = std::clamp(y + dy[dir], 0, height - 1);
          mdp.transition(mdp.sa(s, a), cell(nx, ny)) += p;
        }
      }
    }
  }
  for (int a = 0; a < num_actions; ++a) mdp.transition(mdp.sa(sink, a), sink) = 1.0;

  return std::make_unique<TabularEnv>(name, std::move(mdp), std::move(base), std::move(bonus),
                                      std::move(terminal), 4 * cells);
}

}  // namespace

std::unique_ptr<Environment> make_gridworld(int width, int height, double slip, double gamma) {
  std::ostringstream name;
  name << "grid:" << width << 'x' << height << ':' << slip;
  return make_grid_impl(name.str(), width, height, slip, /*cliff=*/false, gamma);
}

std::unique_ptr<Environment> make_cliff(int width, int height, double gamma) {
  std::ostringstream name;
  name << "cliff:" << width << 'x' << height;
  return make_grid_impl(name.str(), width, height, 0.0, /*cliff=*/true, gamma);
}

std::unique_ptr<Environment> make_environment(const std::string& spec, double gamma) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw std::invalid_argument("make_environment: empty spec");

  auto parse_dims = [](const std::string& text) {
    const auto pos = text.find('x');
    if (pos == std::string::npos)
      throw std::invalid_argument("make_environment: expected WxH dimensions");
    return std::pair<int, int>{std::stoi(text.substr(0, pos)), std::stoi(text.substr(pos + 1))};
  };

  if (parts[0] == "chain" && parts.size() == 2) return make_chain(std::stoi(parts[1]), gamma);
  if (parts[0] == "grid" && (parts.size() == 2 || parts.size() == 3)) {
    const auto [w, h] = parse_dims(parts[1]);
    const double slip = parts.size() == 3 ? std::stod(parts[2]) : 0.0;
    return make_gridworld(w, h, slip, gamma);
  }
  if (parts[0] == "cliff" && parts.size() == 2) {
    const auto [w, h] = parse_dims(parts[1]);
    return make_cliff(w, h, gamma);
  }
  throw std::invalid_argument("make_environment: unknown environment spec '" + spec + "'");
}

}  // namespace dapo
