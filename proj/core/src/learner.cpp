#include "dapo/learner.hpp"

namespace dapo {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "pg-dapo") return Algorithm::PgDapo;
  if (name == "ppo") return Algorithm::Ppo;
  if (name == "ppo-da") return Algorithm::PpoDa;
  if (name == "ppo-da-1step") return Algorithm::PpoDa1Step;
  if (name == "ppo-entropy") return Algorithm::PpoEntropy;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::PgDapo: return "pg-dapo";
    case Algorithm::Ppo: return "ppo";
    case Algorithm::PpoDa: return "ppo-da";
    case Algorithm::PpoDa1Step: return "ppo-da-1step";
    case Algorithm::PpoEntropy: return "ppo-entropy";
  }
  throw std::logic_error("unknown algorithm");
}

double augmented_advantage(double a_hat, double d_hat, double one_over_eta) {
  return a_hat - one_over_eta * d_hat;
}

namespace {

double total_weight(const Batch& batch) {
  double w = 0.0;
  for (const BatchRecord& rec : batch.records) w += rec.weight;
  if (w <= 0.0) throw std::invalid_argument("batch has no weight");
  return w;
}

double target_prob(const PolicyParameters& params, const BatchRecord& rec) {
  return action_distribution(params, rec.state)[rec.action];
}

}  // namespace

VectorXd policy_gradient_dapo(const Batch& batch, const PolicyParameters& params,
                              const DapoConfig& cfg) {
  if (batch.records.empty()) throw std::invalid_argument("policy_gradient_dapo: empty batch");
  if (cfg.one_over_eta <= 0.0)
    throw std::invalid_argument("policy_gradient_dapo: requires 1/eta > 0");
  const double eta = 1.0 / cfg.one_over_eta;
  const double w_total = total_weight(batch);
  VectorXd grad = VectorXd::Zero(params.theta.size());
  for (const BatchRecord& rec : batch.records) {
    if (!(rec.behavior_prob > 0.0))
      throw std::invalid_argument("policy_gradient_dapo: degenerate behavior probability");
    const double ratio = target_prob(params, rec) / rec.behavior_prob;
    grad += (rec.weight / w_total) * ratio * (rec.d_hat - eta * rec.a_hat) *
            log_prob_gradient(params, rec.state, rec.action);
  }
  return grad;
}

std::pair<double, VectorXd> ppo_surrogate(const Batch& batch, const PolicyParameters& params,
                                          const std::vector<double>& advantages, double eps) {
  if (batch.records.empty()) throw std::invalid_argument("ppo_surrogate: empty batch");
  if (advantages.size() != batch.records.size())
    throw std::invalid_argument("ppo_surrogate: advantage length mismatch");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("ppo_surrogate: eps must be in (0,1)");
  const double w_total = total_weight(batch);
  double objective = 0.0;
  VectorXd grad = VectorXd::Zero(params.theta.size());
  for (size_t i = 0; i < batch.records.size(); ++i) {
    const BatchRecord& rec = batch.records[i];
    if (!(rec.behavior_prob > 0.0))
      throw std::invalid_argument("ppo_surrogate: degenerate behavior probability");
    const double adv = advantages[i];
    const double ratio = target_prob(params, rec) / rec.behavior_prob;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = clipped * adv;
    const double w = rec.weight / w_total;
    objective += w * std::min(unclipped_obj, clipped_obj);
    // The clipped branch is constant in theta when it is strictly smaller.
    if (unclipped_obj <= clipped_obj)
      grad += w * adv * ratio * log_prob_gradient(params, rec.state, rec.action);
  }
  return {objective, std::move(grad)};
}

VectorXd value_gradient(const Batch& batch, const PolicyParameters& pparams,
                        const ValueParameters& vparams) {
  if (batch.records.empty()) throw std::invalid_argument("value_gradient: empty batch");
  const double w_total = total_weight(batch);
  VectorXd grad = VectorXd::Zero(vparams.phi.size());
  for (const BatchRecord& rec : batch.records) {
    if (!(rec.behavior_prob > 0.0))
      throw std::invalid_argument("value_gradient: degenerate behavior probability");
    const double ratio = target_prob(pparams, rec) / rec.behavior_prob;
    const auto [v, vgrad] = value_and_gradient(vparams, rec.state);
    grad += (rec.weight / w_total) * ratio * (v - rec.v_target) * vgrad;
  }
  return grad;
}

void learner_update(PolicyParameters& pparams, ValueParameters& vparams, const VectorXd& pgrad,
                    const VectorXd& vgrad, OptimizerState& popt, OptimizerState& vopt,
                    const DapoConfig& cfg) {
  if (pgrad.size() != pparams.theta.size() || vgrad.size() != vparams.phi.size())
    throw std::invalid_argument("learner_update: gradient size mismatch");
  optimizer_step(popt, pparams.theta, pgrad);
  optimizer_step(vopt, vparams.phi, (cfg.loss_mix * vgrad).eval());
}

}  // namespace dapo
