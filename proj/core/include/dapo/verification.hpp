#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dapo/mdp.hpp"
#include "dapo/policy.hpp"

namespace dapo {

// Gradient-bias certificate for the surrogate that drops the state ratio
// d_pi/d_pi_tilde: delta is the Euclidean norm of the gap between the exact
// and the biased gradient, and the bound delta^2 <= c * divergence is checked
// with constants computed by exact maximization over the finite spaces.
struct BiasBoundReport {
  double delta = 0.0;       // ||grad_f - g||_2
  double divergence = 0.0;  // sum_s d_pi(s) KL(pi(.|s), pi_tilde(.|s))
  double zeta1 = 0.0;       // max_s E_{a~pi} ||grad log pi(a|s)||_2
  double zeta2 = 0.0;       // max(max|A|, max|A - lambda-free pseudo A|)
  double c = 0.0;           // 2 (gamma zeta1 zeta2 / (1-gamma))^2
  bool satisfied = false;   // delta^2 <= c * divergence + 1e-12
};

// Exact gradient of J(theta) - lambda * D(theta, theta_tilde):
// sum_s d_pi(s) sum_a pi(a|s) (A(s,a) - lambda * A_pseudo(s,a)) grad log pi,
// where A_pseudo is the advantage of the pseudo-reward log(pi/pi_tilde).
// Requires tabular-softmax parameters (exact summation needs finite spaces).
VectorXd exact_gradient_f(const Mdp& mdp, const PolicyParameters& theta,
                          const PolicyParameters& theta_tilde, double lambda);

// Same summand averaged under d_pi_tilde instead of d_pi (the state ratio is
// dropped, only the action ratio pi/pi_tilde remains).
VectorXd biased_gradient_g(const Mdp& mdp, const PolicyParameters& theta,
                           const PolicyParameters& theta_tilde, double lambda);

BiasBoundReport bias_bound_check(const Mdp& mdp, const PolicyParameters& theta,
                                 const PolicyParameters& theta_tilde, double lambda);

// Compares the analytic occupancy-gradient identity
// grad sum f mu_pi = sum_s d_pi(s) sum_a Q_f(s,a) grad pi(a|s)
// against central finite differences (step 1e-6) and returns the max
// componentwise discrepancy relative to max(1, sup norm of either side).
double pg_theorem_check(const Mdp& mdp, const PolicyParameters& theta, const MatrixXd& f);

// Random problem instances for the verification suite and tests.
Mdp random_mdp(int num_states, int num_actions, double gamma, Rng& rng);
PolicyParameters random_tabular_policy(int num_states, int num_actions, Rng& rng,
                                       double scale = 1.0);

struct VerificationResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Full self-check suite; deterministic for a fixed seed.
std::vector<VerificationResult> run_verification(unsigned long seed = 1);

// Prints one line per result plus a summary; returns the number of failures.
int print_verification(std::ostream& out, const std::vector<VerificationResult>& results);

}  // namespace dapo
