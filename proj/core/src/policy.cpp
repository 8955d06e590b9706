#include "dapo/policy.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

namespace dapo {

namespace {

// Parameter layout, per-action / per-unit blocks:
//   linear policy:  W (d x A), w(i,a) = theta[a*d + i]
//   mlp policy:     W1 (d x h), b1 (h), W2 (h x A), b2 (A)
//   linear value:   w (d)
//   mlp value:      W1 (d x h), b1 (h), w2 (h), b2 (1)

VectorXd softmax(VectorXd logits) {
  logits.array() -= logits.maxCoeff();
  VectorXd p = logits.array().exp();
  p /= p.sum();
  p = p.cwiseMax(kProbFloor);
  p /= p.sum();
  return p;
}

struct MlpForward {
  VectorXd hidden_pre;
  VectorXd hidden;
  VectorXd out;
};

MlpForward mlp_forward(const VectorXd& params, const VectorXd& f, int d, int h, int out_dim) {
  MlpForward fw;
  fw.hidden_pre.resize(h);
  for (int j = 0; j < h; ++j)
    fw.hidden_pre[j] = params.segment(j * d, d).dot(f) + params[d * h + j];
  fw.hidden = fw.hidden_pre.array().tanh();
  fw.out.resize(out_dim);
  const int w2_off = d * h + h;
  for (int a = 0; a < out_dim; ++a)
    fw.out[a] = params.segment(w2_off + a * h, h).dot(fw.hidden) + params[w2_off + out_dim * h + a];
  return fw;
}

// Backprop d(out . dout)/dparams for the two-layer tanh net.
void mlp_backward(const VectorXd& params, const VectorXd& f, const MlpForward& fw,
                  const VectorXd& dout, int d, int h, int out_dim, VectorXd& grad) {
  const int w2_off = d * h + h;
  VectorXd dhidden = VectorXd::Zero(h);
  for (int a = 0; a < out_dim; ++a) {
    grad.segment(w2_off + a * h, h) += dout[a] * fw.hidden;
    grad[w2_off + out_dim * h + a] += dout[a];
    dhidden += dout[a] * params.segment(w2_off + a * h, h);
  }
  const VectorXd dpre = dhidden.array() * (1.0 - fw.hidden.array().square());
  for (int j = 0; j < h; ++j) {
    grad.segment(j * d, d) += dpre[j] * f;
    grad[d * h + j] += dpre[j];
  }
}

VectorXd state_features(const Architecture& arch, int state) {
  if (state < 0 || state >= arch.num_states)
    throw std::invalid_argument("state index out of range");
  return arch.features.row(state).transpose();
}

}  // namespace

int Architecture::policy_param_count() const {
  switch (kind) {
    case ModelKind::TabularSoftmax:
      return num_states * num_actions;
    case ModelKind::LinearSoftmax:
      return feature_dim() * num_actions;
    case ModelKind::MlpSoftmax:
      return feature_dim() * hidden + hidden + hidden * num_actions + num_actions;
  }
  throw std::logic_error("unknown model kind");
}

int Architecture::value_param_count() const {
  switch (kind) {
    case ModelKind::TabularSoftmax:
      return num_states;
    case ModelKind::LinearSoftmax:
      return feature_dim();
    case ModelKind::MlpSoftmax:
      return feature_dim() * hidden + hidden + hidden + 1;
  }
  throw std::logic_error("unknown model kind");
}

Architecture make_architecture(ModelKind kind, int num_states, int num_actions, int hidden) {
  return make_architecture(kind, MatrixXd::Identity(num_states, num_states), num_actions, hidden);
}

Architecture make_architecture(ModelKind kind, const MatrixXd& features, int num_actions,
                               int hidden) {
  Architecture arch;
  arch.kind = kind;
  arch.num_states = static_cast<int>(features.rows());
  arch.num_actions = num_actions;
  arch.features = features;
  arch.hidden = hidden;
  return arch;
}

namespace {

VectorXd init_vector(const Architecture& arch, int count, int fan_in, Rng& rng) {
  if (arch.kind == ModelKind::TabularSoftmax) return VectorXd::Zero(count);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  VectorXd v(count);
  for (int i = 0; i < count; ++i) v[i] = scale * unif(rng);
  return v;
}

}  // namespace

PolicyParameters make_policy(const Architecture& arch, Rng& rng) {
  return {arch, init_vector(arch, arch.policy_param_count(), std::max(1, arch.feature_dim()), rng)};
}

ValueParameters make_value(const Architecture& arch, Rng& rng) {
  return {arch, init_vector(arch, arch.value_param_count(), std::max(1, arch.feature_dim()), rng)};
}

VectorXd action_distribution(const PolicyParameters& params, int state) {
  const Architecture& arch = params.arch;
  if (params.theta.size() != arch.policy_param_count())
    throw std::invalid_argument("action_distribution: parameter size mismatch");
  switch (arch.kind) {
    case ModelKind::TabularSoftmax: {
      if (state < 0 || state >= arch.num_states)
        throw std::invalid_argument("state index out of range");
      return softmax(params.theta.segment(state * arch.num_actions, arch.num_actions));
    }
    case ModelKind::LinearSoftmax: {
      const VectorXd f = state_features(arch, state);
      const int d = arch.feature_dim();
      VectorXd logits(arch.num_actions);
      for (int a = 0; a < arch.num_actions; ++a) logits[a] = params.theta.segment(a * d, d).dot(f);
      return softmax(logits);
    }
    case ModelKind::MlpSoftmax: {
      const VectorXd f = state_features(arch, state);
      return softmax(mlp_forward(params.theta, f, arch.feature_dim(), arch.hidden,
                                 arch.num_actions).out);
    }
  }
  throw std::logic_error("unknown model kind");
}

VectorXd log_prob_gradient(const PolicyParameters& params, int state, int action) {
  const Architecture& arch = params.arch;
  if (action < 0 || action >= arch.num_actions)
    throw std::invalid_argument("action index out of range");
  const VectorXd pi = action_distribution(params, state);
  // d log pi(a|s) / d logits(b) = 1{b=a} - pi(b|s)
  VectorXd dlogits = -pi;
  dlogits[action] += 1.0;

  VectorXd grad = VectorXd::Zero(params.theta.size());
  switch (arch.kind) {
    case ModelKind::TabularSoftmax:
      grad.segment(state * arch.num_actions, arch.num_actions) = dlogits;
      return grad;
    case ModelKind::LinearSoftmax: {
      const VectorXd f = state_features(arch, state);
      const int d = arch.feature_dim();
      for (int a = 0; a < arch.num_actions; ++a) grad.segment(a * d, d) = dlogits[a] * f;
      return grad;
    }
    case ModelKind::MlpSoftmax: {
      const VectorXd f = state_features(arch, state);
      const MlpForward fw = mlp_forward(params.theta, f, arch.feature_dim(), arch.hidden,
                                        arch.num_actions);
      mlp_backward(params.theta, f, fw, dlogits, arch.feature_dim(), arch.hidden,
                   arch.num_actions, grad);
      return grad;
    }
  }
  throw std::logic_error("unknown model kind");
}

double value(const ValueParameters& params, int state) {
  const Architecture& arch = params.arch;
  if (params.phi.size() != arch.value_param_count())
    throw std::invalid_argument("value: parameter size mismatch");
  switch (arch.kind) {
    case ModelKind::TabularSoftmax:
      if (state < 0 || state >= arch.num_states)
        throw std::invalid_argument("state index out of range");
      return params.phi[state];
    case ModelKind::LinearSoftmax:
      return params.phi.dot(state_features(arch, state));
    case ModelKind::MlpSoftmax:
      return mlp_forward(params.phi, state_features(arch, state), arch.feature_dim(),
                         arch.hidden, 1).out[0];
  }
  throw std::logic_error("unknown model kind");
}

std::pair<double, VectorXd> value_and_gradient(const ValueParameters& params, int state) {
  const Architecture& arch = params.arch;
  VectorXd grad = VectorXd::Zero(params.phi.size());
  switch (arch.kind) {
    case ModelKind::TabularSoftmax:
      grad[state] = 1.0;
      return {value(params, state), std::move(grad)};
    case ModelKind::LinearSoftmax: {
      const VectorXd f = state_features(arch, state);
      grad = f;
      return {params.phi.dot(f), std::move(grad)};
    }
    case ModelKind::MlpSoftmax: {
      const VectorXd f = state_features(arch, state);
      const MlpForward fw = mlp_forward(params.phi, f, arch.feature_dim(), arch.hidden, 1);
      mlp_backward(params.phi, f, fw, VectorXd::Ones(1), arch.feature_dim(), arch.hidden, 1, grad);
      return {fw.out[0], std::move(grad)};
    }
  }
  throw std::logic_error("unknown model kind");
}

TabularPolicy policy_table(const PolicyParameters& params) {
  TabularPolicy pi;
  pi.probs.resize(params.arch.num_states, params.arch.num_actions);
  for (int s = 0; s < params.arch.num_states; ++s)
    pi.probs.row(s) = action_distribution(params, s).transpose();
  return pi;
}

OptimizerState make_optimizer(const OptimizerConfig& config, Eigen::Index param_count) {
  OptimizerState state;
  state.config = config;
  state.first_moment = VectorXd::Zero(param_count);
  state.second_moment = VectorXd::Zero(param_count);
  return state;
}

double learning_rate(const OptimizerState& state) {
  const OptimizerConfig& c = state.config;
  if (c.horizon <= 1) return state.step == 0 ? c.alpha0 : 0.0;
  const double frac = static_cast<double>(state.step) / static_cast<double>(c.horizon - 1);
  return c.alpha0 * std::max(0.0, 1.0 - frac);
}

void optimizer_step(OptimizerState& state, VectorXd& params, const VectorXd& grad) {
  if (params.size() != state.first_moment.size() || grad.size() != params.size())
    throw std::invalid_argument("optimizer_step: size mismatch");
  if (!grad.allFinite()) throw std::invalid_argument("optimizer_step: non-finite gradient");
  const OptimizerConfig& c = state.config;
  const double alpha = learning_rate(state);
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grad;
  state.second_moment = c.beta2 * state.second_moment.array() +
                        (1.0 - c.beta2) * grad.array().square();
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -= alpha * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + c.eps);
}

VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& fn,
                                    const VectorXd& params, double eps) {
  VectorXd grad(params.size());
  VectorXd x = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    x[i] = params[i] + eps;
    const double hi = fn(x);
    x[i] = params[i] - eps;
    const double lo = fn(x);
    x[i] = params[i];
    grad[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

namespace {

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::TabularSoftmax: return "tabular-softmax";
    case ModelKind::LinearSoftmax: return "linear-softmax";
    case ModelKind::MlpSoftmax: return "mlp-softmax";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "tabular-softmax") return ModelKind::TabularSoftmax;
  if (name == "linear-softmax") return ModelKind::LinearSoftmax;
  if (name == "mlp-softmax") return ModelKind::MlpSoftmax;
  throw std::invalid_argument("unknown model kind: " + name);
}

}  // namespace

void write_parameters(std::ostream& out, const PolicyParameters& params) {
  if (!params.arch.features.isIdentity(0.0))
    throw std::invalid_argument("write_parameters: only one-hot feature models are serializable");
  out << kind_name(params.arch.kind) << ' ' << params.arch.num_states << ' '
      << params.arch.num_actions << ' ' << params.arch.hidden << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", params.theta[i]);
    out << buf << (i + 1 == params.theta.size() ? '\n' : ' ');
  }
}

PolicyParameters read_policy_parameters(std::istream& in) {
  std::string kind;
  int num_states = 0, num_actions = 0, hidden = 0;
  if (!(in >> kind >> num_states >> num_actions >> hidden))
    throw std::invalid_argument("read_policy_parameters: malformed header");
  Architecture arch = make_architecture(kind_from_name(kind), num_states, num_actions, hidden);
  PolicyParameters params;
  params.arch = arch;
  params.theta.resize(arch.policy_param_count());
  for (Eigen::Index i = 0; i < params.theta.size(); ++i)
    if (!(in >> params.theta[i]))
      throw std::invalid_argument("read_policy_parameters: truncated vector");
  return params;
}

}  // namespace dapo
