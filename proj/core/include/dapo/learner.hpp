#pragma once

#include <string>
#include <vector>

#include "dapo/common.hpp"
#include "dapo/policy.hpp"
#include "dapo/trace.hpp"

namespace dapo {

enum class Algorithm { PgDapo, Ppo, PpoDa, PpoDa1Step, PpoEntropy };

Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm algorithm);

// Every scalar of the default configuration. Defaults match the reference
// hyper-parameter table exactly; see tests/config fidelity.
struct DapoConfig {
  double one_over_eta = 0.5;
  double clip_eps = 0.2;
  double loss_mix = 0.5;  // b, value-loss coefficient in the mixed update
  int batch_size = 1024;
  int rollout_length = 32;
  int snapshot_period = 100;  // M learner updates per snapshot republish
  int replay_capacity = 16384;
  int burn_in = 1024;
  int total_iterations = 100;
  double learning_rate = 1e-3;
  TraceConfig trace;  // gamma=0.99, lambda=0.9, c/rho truncation levels
  Algorithm algorithm = Algorithm::PpoDa;
};

// One sampled (s,a) record with its estimates. `weight` defaults to 1 and
// exists so tests can form exact expectations over enumerated records.
struct BatchRecord {
  int state = 0;
  int action = 0;
  double behavior_prob = 0.0;
  double a_hat = 0.0;     // advantage estimate
  double d_hat = 0.0;     // multi-step divergence estimate
  double v_target = 0.0;  // V-trace value target v_s
  double weight = 1.0;
};

struct Batch {
  std::vector<BatchRecord> records;
};

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double policy_grad_norm = 0.0;
  double value_grad_norm = 0.0;
  double mean_ratio = 0.0;
  double mean_kl = 0.0;
};

// A_hat - (1/eta) D_hat, the divergence-augmented advantage.
double augmented_advantage(double a_hat, double d_hat, double one_over_eta);

// Descent gradient of the augmented policy loss:
// mean over the batch of (pi/pi_t)(D_hat - eta A_hat) grad log pi.
// D_hat and A_hat are read from the records; the caller computes them
// against the current theta.
VectorXd policy_gradient_dapo(const Batch& batch, const PolicyParameters& params,
                              const DapoConfig& cfg);

// Clipped surrogate, returned as a maximization objective with its gradient:
// mean of min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
std::pair<double, VectorXd> ppo_surrogate(const Batch& batch, const PolicyParameters& params,
                                          const std::vector<double>& advantages, double eps);

// Descent gradient of the value loss: mean of (pi/pi_t)(V(s) - v_s) grad V(s).
VectorXd value_gradient(const Batch& batch, const PolicyParameters& pparams,
                        const ValueParameters& vparams);

// Mixed update: the policy block receives grad L_pi, the value block
// b * grad L_v, each through its optimizer.
void learner_update(PolicyParameters& pparams, ValueParameters& vparams, const VectorXd& pgrad,
                    const VectorXd& vgrad, OptimizerState& popt, OptimizerState& vopt,
                    const DapoConfig& cfg);

}  // namespace dapo
