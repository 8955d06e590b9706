#pragma once

#include "dapo/common.hpp"
#include "dapo/mdp.hpp"

namespace dapo {

enum class LegendreKind {
  // F(x) = sum_i x_i log x_i - sum_i x_i on the positive orthant.
  JointNegativeEntropy,
  // F(mu) = sum_{s,a} mu(s,a) log( mu(s,a) / sum_b mu(s,b) ). Convex but not
  // strictly convex in mu; its induced conditional divergence is still the
  // one used by the parametric algorithms.
  ConditionalNegativeEntropy,
};

struct LegendreFunction {
  LegendreKind kind = LegendreKind::JointNegativeEntropy;

  double value(const MatrixXd& x) const;
  MatrixXd gradient(const MatrixXd& x) const;
};

// D_F(x, y) = F(x) - F(y) - <grad F(y), x - y>. Requires y strictly positive.
double bregman(const LegendreFunction& f, const MatrixXd& x, const MatrixXd& y);

// sum_i p_i log(p_i / q_i) with 0 log 0 = 0 and q clamped at kProbFloor.
double kl(const VectorXd& p, const VectorXd& q);

// Eq-style conditional divergence: sum_s d(s) D_F(pi1(.|s), pi2(.|s)).
double conditional_divergence(const StateDistribution& d, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, const LegendreFunction& f);

// The f-term grad F(mu_pi) - grad F(mu_t): log(pi/pi_t) for the conditional
// form, log(mu_pi/mu_t) for the joint form (occupancies from `mdp`).
MatrixXd grad_f_difference(const LegendreFunction& f, const TabularPolicy& policy,
                           const TabularPolicy& behavior, const Mdp& mdp);

}  // namespace dapo
