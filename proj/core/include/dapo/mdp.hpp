#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dapo/common.hpp"

namespace dapo {

// Tabular MDP. Transition rows are indexed by the flattened pair
// sa = s * num_actions + a, columns by next state.
struct Mdp {
  int num_states = 0;
  int num_actions = 0;
  MatrixXd transition;    // (S*A) x S, each row a distribution over s'
  MatrixXd reward;        // S x A
  VectorXd initial_dist;  // d0 over states
  double discount = 0.0;  // gamma in (0,1)

  int sa(int s, int a) const { return s * num_actions + a; }
};

struct TabularPolicy {
  MatrixXd probs;  // S x A, rows are action distributions
};

struct StateDistribution {
  VectorXd weights;
};

// Distribution over state-action pairs. `residual` holds the flow-constraint
// violation last computed by occupancy_residual.
struct OccupancyMeasure {
  MatrixXd weights;  // S x A
  double residual = 0.0;
};

// Throws std::invalid_argument naming the first violated invariant.
void validate_mdp(const Mdp& mdp);
void validate_policy(const Mdp& mdp, const TabularPolicy& policy);

TabularPolicy uniform_policy(int num_states, int num_actions);

// Row-stochastic state transition matrix under pi: M(s, s') = sum_a pi(a|s) P(s'|s,a).
MatrixXd policy_transition_matrix(const Mdp& mdp, const TabularPolicy& policy);

// Discounted state distribution d_pi = (1-gamma)(I - gamma P_pi^T)^{-1} d0,
// by dense linear solve.
StateDistribution state_distribution(const Mdp& mdp, const TabularPolicy& policy);

// mu_pi(s,a) = d_pi(s) pi(a|s), with the flow residual populated.
OccupancyMeasure occupancy(const Mdp& mdp, const TabularPolicy& policy);

// pi_mu(a|s) = mu(s,a) / sum_b mu(s,b). States with zero mass get a uniform
// row; their indices are reported through `flagged_states` when given.
TabularPolicy policy_from_occupancy(const OccupancyMeasure& mu,
                                    std::vector<int>* flagged_states = nullptr);

// J(pi) = <r, mu_pi>.
double performance(const Mdp& mdp, const TabularPolicy& policy);

struct ValueFunctions {
  VectorXd v;          // S
  MatrixXd q;          // S x A
  MatrixXd advantage;  // S x A
};
ValueFunctions value_functions(const Mdp& mdp, const TabularPolicy& policy);

// Q^pi(f)(s,a) = E_{pi|s,a} sum_l gamma^l f(s_{t+l}, a_{t+l}), exact linear solve.
MatrixXd discounted_operator(const Mdp& mdp, const TabularPolicy& policy, const MatrixXd& f);

// max_s' | sum_a' mu(s',a') - (1-gamma) d0(s') - gamma sum_{s,a} P(s'|s,a) mu(s,a) |
double occupancy_residual(const Mdp& mdp, const OccupancyMeasure& mu);

// Optimal state values by dense value iteration, to within `tol` in sup norm.
VectorXd value_iteration(const Mdp& mdp, double tol = 1e-13, int max_iterations = 1000000);
TabularPolicy greedy_policy(const Mdp& mdp, const VectorXd& v);
// J* = (1-gamma) <d0, V*>.
double optimal_performance(const Mdp& mdp);

// Plain-text serialization: header "mdp S A gamma", one line per (s,a) with
// reward then S transition probabilities, then a line with d0. Values are
// written with 17 significant digits so round-trips are exact.
void write_mdp(std::ostream& out, const Mdp& mdp);
Mdp read_mdp(std::istream& in);
std::string mdp_to_text(const Mdp& mdp);
Mdp mdp_from_text(const std::string& text);

}  // namespace dapo
