#pragma once

#include <iosfwd>
#include <vector>

#include "dapo/common.hpp"

namespace dapo {

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  bool terminal = false;       // episode ends after this step
  double behavior_prob = 0.0;  // pi_t(a|s) recorded at sampling time
};

// Fixed-length trajectory segment. `bootstrap_state` is the state after the
// final step, used for value bootstrapping when the segment was truncated
// mid-episode; it is ignored when the final step is terminal.
struct Rollout {
  std::vector<Step> steps;
  int bootstrap_state = 0;

  int length() const { return static_cast<int>(steps.size()); }
};

struct TraceConfig {
  double gamma = 0.99;
  double lambda_v = 0.9;
  double c_bar_v = 1.0;
  double rho_bar_v = 1.0;
  double c_bar_d = 0.5;
  double rho_bar_d = 1.0;
};

// Stored-only tail beyond a rollout: rewards and snapshot values V_t for the
// TD(lambda) branch of the value recursion. `values` has one more entry than
// `rewards` (the horizon bootstrap).
struct RolloutTail {
  std::vector<double> rewards;
  std::vector<double> values;
};

// Backward V-trace recursion over the rollout. `values` carries V_theta(s_j)
// for each step plus the bootstrap value (length n+1). Terminal steps
// bootstrap with 0 and cut all products.
std::vector<double> vtrace_values(const Rollout& rollout, std::span<const double> target_probs,
                                  std::span<const double> values, const TraceConfig& cfg);

// Same, with a TD(lambda) extension past the rollout end computed from
// stored rewards and snapshot values.
std::vector<double> vtrace_values_extended(const Rollout& rollout,
                                           std::span<const double> target_probs,
                                           std::span<const double> values, const TraceConfig& cfg,
                                           const RolloutTail& tail);

// A_hat_j = r_j + gamma v_{j+1} - V_theta(s_j), with v_{j+1} = 0 at terminals
// and the bootstrap value past the rollout end.
std::vector<double> advantage_estimates(const Rollout& rollout, std::span<const double> v,
                                        std::span<const double> values, double gamma);

// D_hat_i = f_i + sum_{j>=1} gamma^j (prod_{k=0}^{j-1} c_{i+k}) rho_{i+j} f_{i+j},
// ratios truncated at c_bar_d / rho_bar_d, products stopping at terminals.
std::vector<double> multistep_divergence(const Rollout& rollout, std::span<const double> f,
                                         std::span<const double> target_probs,
                                         const TraceConfig& cfg);

enum class FTermKind { Kl, Entropy, Custom };

struct FTermSpec {
  FTermKind kind = FTermKind::Kl;
  MatrixXd table;  // used by Custom, indexed (state, action)
};

// Per-step f values: log(pi/pi_t) for Kl, log pi for Entropy, table lookup
// for Custom. Probabilities clamped at kProbFloor.
std::vector<double> f_terms(const Rollout& rollout, std::span<const double> target_probs,
                            std::span<const double> behavior_probs, const FTermSpec& spec);

// Text fixture format, one step per line:
//   state action reward terminal behavior_prob
// followed by a final line "bootstrap <state>".
void write_rollout(std::ostream& out, const Rollout& rollout);
Rollout read_rollout(std::istream& in);

}  // namespace dapo
