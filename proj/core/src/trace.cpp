#include "dapo/trace.hpp"

#include <istream>
#include <ostream>

namespace dapo {

namespace {

void check_lengths(const Rollout& rollout, std::span<const double> target_probs,
                   std::span<const double> values, bool with_bootstrap) {
  const size_t n = rollout.steps.size();
  if (target_probs.size() != n)
    throw std::invalid_argument("trace: target probability length mismatch");
  if (values.size() != n + (with_bootstrap ? 1 : 0))
    throw std::invalid_argument("trace: value length mismatch");
  for (const Step& step : rollout.steps)
    if (!(step.behavior_prob > 0.0))
      throw std::invalid_argument("trace: behavior probability must be positive");
}

double ratio(const Step& step, double target_prob) { return target_prob / step.behavior_prob; }

}  // namespace

std::vector<double> vtrace_values(const Rollout& rollout, std::span<const double> target_probs,
                                  std::span<const double> values, const TraceConfig& cfg) {
  check_lengths(rollout, target_probs, values, true);
  const int n = rollout.length();
  std::vector<double> v(n, 0.0);
  double v_next = values[n];
  double value_next = values[n];
  for (int j = n - 1; j >= 0; --j) {
    const Step& step = rollout.steps[j];
    if (step.terminal) {
      v_next = 0.0;
      value_next = 0.0;
    }
    const double w = ratio(step, target_probs[j]);
    const double rho = std::min(cfg.rho_bar_v, w);
    const double c = std::min(cfg.c_bar_v, w);
    const double delta = rho * (step.reward + cfg.gamma * value_next - values[j]);
    v[j] = values[j] + delta + cfg.gamma * c * (v_next - value_next);
    v_next = v[j];
    value_next = values[j];
  }
  return v;
}

std::vector<double> vtrace_values_extended(const Rollout& rollout,
                                           std::span<const double> target_probs,
                                           std::span<const double> values, const TraceConfig& cfg,
                                           const RolloutTail& tail) {
  if (tail.values.size() != tail.rewards.size() + 1)
    throw std::invalid_argument("trace: tail values must have one more entry than rewards");
  // TD(lambda) over the stored-only tail, back to the rollout boundary.
  double v_boundary = tail.values.back();
  for (int j = static_cast<int>(tail.rewards.size()) - 1; j >= 0; --j) {
    v_boundary = tail.rewards[j] + cfg.gamma * cfg.lambda_v * v_boundary +
                 cfg.gamma * (1.0 - cfg.lambda_v) * tail.values[j + 1];
  }
  check_lengths(rollout, target_probs, values, true);
  const int n = rollout.length();
  std::vector<double> v(n, 0.0);
  double v_next = v_boundary;
  double value_next = values[n];
  for (int j = n - 1; j >= 0; --j) {
    const Step& step = rollout.steps[j];
    if (step.terminal) {
      v_next = 0.0;
      value_next = 0.0;
    }
    const double w = ratio(step, target_probs[j]);
    const double rho = std::min(cfg.rho_bar_v, w);
    const double c = std::min(cfg.c_bar_v, w);
    const double delta = rho * (step.reward + cfg.gamma * value_next - values[j]);
    v[j] = values[j] + delta + cfg.gamma * c * (v_next - value_next);
    v_next = v[j];
    value_next = values[j];
  }
  return v;
}

std::vector<double> advantage_estimates(const Rollout& rollout, std::span<const double> v,
                                        std::span<const double> values, double gamma) {
  const int n = rollout.length();
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("advantage_estimates: v length mismatch");
  if (static_cast<int>(values.size()) != n + 1)
    throw std::invalid_argument("advantage_estimates: value length mismatch");
  std::vector<double> a(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const Step& step = rollout.steps[j];
    double v_next = 0.0;
    if (!step.terminal) v_next = (j + 1 < n) ? v[j + 1] : values[n];
    a[j] = step.reward + gamma * v_next - values[j];
  }
  return a;
}

std::vector<double> multistep_divergence(const Rollout& rollout, std::span<const double> f,
                                         std::span<const double> target_probs,
                                         const TraceConfig& cfg) {
  const int n = rollout.length();
  if (static_cast<int>(f.size()) != n)
    throw std::invalid_argument("multistep_divergence: f length mismatch");
  if (static_cast<int>(target_probs.size()) != n)
    throw std::invalid_argument("multistep_divergence: target probability length mismatch");
  for (const Step& step : rollout.steps)
    if (!(step.behavior_prob > 0.0))
      throw std::invalid_argument("multistep_divergence: behavior probability must be positive");

  // D_i = f_i + T_i with T_i = gamma c_i (rho_{i+1} f_{i+1} + T_{i+1}).
  std::vector<double> d(n, 0.0);
  double t_next = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const Step& step = rollout.steps[i];
    double t = 0.0;
    if (!step.terminal && i + 1 < n) {
      const double c = std::min(cfg.c_bar_d, ratio(step, target_probs[i]));
      const double rho_next =
          std::min(cfg.rho_bar_d, ratio(rollout.steps[i + 1], target_probs[i + 1]));
      t = cfg.gamma * c * (rho_next * f[i + 1] + t_next);
    }
    d[i] = f[i] + t;
    t_next = t;
  }
  return d;
}

std::vector<double> f_terms(const Rollout& rollout, std::span<const double> target_probs,
                            std::span<const double> behavior_probs, const FTermSpec& spec) {
  const size_t n = rollout.steps.size();
  if (target_probs.size() != n || behavior_probs.size() != n)
    throw std::invalid_argument("f_terms: probability length mismatch");
  std::vector<double> f(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    switch (spec.kind) {
      case FTermKind::Kl:
        f[i] = clamped_log(target_probs[i]) - clamped_log(behavior_probs[i]);
        break;
      case FTermKind::Entropy:
        f[i] = clamped_log(target_probs[i]);
        break;
      case FTermKind::Custom:
        f[i] = spec.table(rollout.steps[i].state, rollout.steps[i].action);
        break;
    }
  }
  return f;
}

void write_rollout(std::ostream& out, const Rollout& rollout) {
  char buf[64];
  for (const Step& step : rollout.steps) {
    out << step.state << ' ' << step.action << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", step.reward);
    out << buf << ' ' << (step.terminal ? 1 : 0) << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", step.behavior_prob);
    out << buf << '\n';
  }
  out << "bootstrap " << rollout.bootstrap_state << '\n';
}

Rollout read_rollout(std::istream& in) {
  Rollout rollout;
  std::string token;
  while (in >> token) {
    if (token == "bootstrap") {
      if (!(in >> rollout.bootstrap_state))
        throw std::invalid_argument("read_rollout: missing bootstrap state");
      return rollout;
    }
    Step step;
    int terminal = 0;
    step.state = std::stoi(token);
    if (!(in >> step.action >> step.reward >> terminal >> step.behavior_prob))
      throw std::invalid_argument("read_rollout: truncated step line");
    step.terminal = terminal != 0;
    rollout.steps.push_back(step);
  }
  throw std::invalid_argument("read_rollout: missing bootstrap line");
}

}  // namespace dapo
