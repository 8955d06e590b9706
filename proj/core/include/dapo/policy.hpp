#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "dapo/common.hpp"
#include "dapo/mdp.hpp"

namespace dapo {

enum class ModelKind { TabularSoftmax, LinearSoftmax, MlpSoftmax };

// Shared architecture description for policy and value heads. Linear and MLP
// models read per-state rows of `features`; tabular models ignore it.
struct Architecture {
  ModelKind kind = ModelKind::TabularSoftmax;
  int num_states = 0;
  int num_actions = 0;
  MatrixXd features;   // S x feature_dim (one-hot by default)
  int hidden = 32;     // MLP hidden width (tanh)

  int feature_dim() const { return static_cast<int>(features.cols()); }
  int policy_param_count() const;
  int value_param_count() const;
};

Architecture make_architecture(ModelKind kind, int num_states, int num_actions, int hidden = 32);
Architecture make_architecture(ModelKind kind, const MatrixXd& features, int num_actions,
                               int hidden = 32);

struct PolicyParameters {
  Architecture arch;
  VectorXd theta;
};

struct ValueParameters {
  Architecture arch;
  VectorXd phi;
};

// Tabular parameters start at zero; linear/MLP weights from a symmetric
// uniform range scaled by 1/sqrt(fan-in).
PolicyParameters make_policy(const Architecture& arch, Rng& rng);
ValueParameters make_value(const Architecture& arch, Rng& rng);

// Softmax of the state's logits, entries clamped at kProbFloor.
VectorXd action_distribution(const PolicyParameters& params, int state);

// Exact gradient of log pi_theta(a|s) w.r.t. theta (manual backprop for MLP).
VectorXd log_prob_gradient(const PolicyParameters& params, int state, int action);

double value(const ValueParameters& params, int state);
std::pair<double, VectorXd> value_and_gradient(const ValueParameters& params, int state);

// Full S x A policy table (for exact oracles against the tabular MDP).
TabularPolicy policy_table(const PolicyParameters& params);

// Adam with bias correction and a linear learning-rate schedule from alpha0
// down to 0 at the final step of `horizon`.
struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double alpha0 = 1e-3;
  long horizon = 1;
};

struct OptimizerState {
  OptimizerConfig config;
  VectorXd first_moment;
  VectorXd second_moment;
  long step = 0;
};

OptimizerState make_optimizer(const OptimizerConfig& config, Eigen::Index param_count);
double learning_rate(const OptimizerState& state);
void optimizer_step(OptimizerState& state, VectorXd& params, const VectorXd& grad);

// Central differences (f(x+eps e_i) - f(x-eps e_i)) / (2 eps).
VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& fn,
                                    const VectorXd& params, double eps = 1e-5);

// Flat decimal vector with an architecture header line.
void write_parameters(std::ostream& out, const PolicyParameters& params);
PolicyParameters read_policy_parameters(std::istream& in);

}  // namespace dapo
