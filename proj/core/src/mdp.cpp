#include "dapo/mdp.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace dapo {

namespace {

constexpr double kRowTol = 1e-12;

bool is_distribution(const Eigen::Ref<const VectorXd>& row, double tol) {
  if ((row.array() < 0.0).any()) return false;
  return std::abs(row.sum() - 1.0) <= tol;
}

}  // namespace

void validate_mdp(const Mdp& mdp) {
  if (mdp.num_states <= 0 || mdp.num_actions <= 0)
    throw std::invalid_argument("mdp: state and action counts must be positive");
  if (mdp.transition.rows() != mdp.num_states * mdp.num_actions ||
      mdp.transition.cols() != mdp.num_states)
    throw std::invalid_argument("mdp: transition table has wrong shape");
  if (mdp.reward.rows() != mdp.num_states || mdp.reward.cols() != mdp.num_actions)
    throw std::invalid_argument("mdp: reward table has wrong shape");
  if (mdp.initial_dist.size() != mdp.num_states)
    throw std::invalid_argument("mdp: initial distribution has wrong size");
  if (!(mdp.discount > 0.0 && mdp.discount < 1.0))
    throw std::invalid_argument("mdp: discount out of range (0,1)");
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      if ((mdp.transition.row(mdp.sa(s, a)).array() < 0.0).any())
        throw std::invalid_argument("mdp: negative transition probability at (s=" +
                                    std::to_string(s) + ", a=" + std::to_string(a) + ")");
      if (!is_distribution(mdp.transition.row(mdp.sa(s, a)).transpose(), kRowTol))
        throw std::invalid_argument("mdp: row not stochastic at (s=" + std::to_string(s) +
                                    ", a=" + std::to_string(a) + ")");
    }
  }
  if (!is_distribution(mdp.initial_dist, kRowTol))
    throw std::invalid_argument("mdp: initial distribution not stochastic");
}

void validate_policy(const Mdp& mdp, const TabularPolicy& policy) {
  if (policy.probs.rows() != mdp.num_states || policy.probs.cols() != mdp.num_actions)
    throw std::invalid_argument("policy: wrong shape for this mdp");
  for (int s = 0; s < mdp.num_states; ++s) {
    if (!is_distribution(policy.probs.row(s).transpose(), kRowTol))
      throw std::invalid_argument("policy: row not stochastic at s=" + std::to_string(s));
  }
}

TabularPolicy uniform_policy(int num_states, int num_actions) {
  TabularPolicy pi;
  pi.probs = MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions);
  return pi;
}

MatrixXd policy_transition_matrix(const Mdp& mdp, const TabularPolicy& policy) {
  MatrixXd m = MatrixXd::Zero(mdp.num_states, mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      m.row(s) += policy.probs(s, a) * mdp.transition.row(mdp.sa(s, a));
  return m;
}

StateDistribution state_distribution(const Mdp& mdp, const TabularPolicy& policy) {
  const MatrixXd m = policy_transition_matrix(mdp, policy);
  const int n = mdp.num_states;
  MatrixXd lhs = MatrixXd::Identity(n, n) - mdp.discount * m.transpose();
  VectorXd d = lhs.partialPivLu().solve((1.0 - mdp.discount) * mdp.initial_dist);
  if (!d.allFinite())
    throw std::runtime_error("state_distribution: linear solve produced non-finite values");
  return StateDistribution{std::move(d)};
}

OccupancyMeasure occupancy(const Mdp& mdp, const TabularPolicy& policy) {
  const StateDistribution d = state_distribution(mdp, policy);
  OccupancyMeasure mu;
  mu.weights = d.weights.asDiagonal() * policy.probs;
  mu.residual = occupancy_residual(mdp, mu);
  return mu;
}

TabularPolicy policy_from_occupancy(const OccupancyMeasure& mu, std::vector<int>* flagged_states) {
  const int num_states = static_cast<int>(mu.weights.rows());
  const int num_actions = static_cast<int>(mu.weights.cols());
  TabularPolicy pi;
  pi.probs.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    const double mass = mu.weights.row(s).sum();
    if (mass > 0.0) {
      pi.probs.row(s) = mu.weights.row(s) / mass;
    } else {
      pi.probs.row(s).setConstant(1.0 / num_actions);
      if (flagged_states) flagged_states->push_back(s);
    }
  }
  return pi;
}

double performance(const Mdp& mdp, const TabularPolicy& policy) {
  const OccupancyMeasure mu = occupancy(mdp, policy);
  return (mdp.reward.array() * mu.weights.array()).sum();
}

ValueFunctions value_functions(const Mdp& mdp, const TabularPolicy& policy) {
  const int n = mdp.num_states;
  const MatrixXd m = policy_transition_matrix(mdp, policy);
  const VectorXd r_pi = (policy.probs.array() * mdp.reward.array()).rowwise().sum();
  ValueFunctions out;
  out.v = (MatrixXd::Identity(n, n) - mdp.discount * m).partialPivLu().solve(r_pi);
  out.q.resize(n, mdp.num_actions);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      out.q(s, a) = mdp.reward(s, a) + mdp.discount * mdp.transition.row(mdp.sa(s, a)).dot(out.v);
  out.advantage = out.q.colwise() - out.v;
  return out;
}

MatrixXd discounted_operator(const Mdp& mdp, const TabularPolicy& policy, const MatrixXd& f) {
  if (f.rows() != mdp.num_states || f.cols() != mdp.num_actions)
    throw std::invalid_argument("discounted_operator: f has wrong shape");
  // Q_f(s,a) = f(s,a) + gamma P(.|s,a) . W with W = (I - gamma P_pi)^{-1} f_pi.
  const int n = mdp.num_states;
  const MatrixXd m = policy_transition_matrix(mdp, policy);
  const VectorXd f_pi = (policy.probs.array() * f.array()).rowwise().sum();
  const VectorXd w = (MatrixXd::Identity(n, n) - mdp.discount * m).partialPivLu().solve(f_pi);
  MatrixXd q(n, mdp.num_actions);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      q(s, a) = f(s, a) + mdp.discount * mdp.transition.row(mdp.sa(s, a)).dot(w);
  return q;
}

double occupancy_residual(const Mdp& mdp, const OccupancyMeasure& mu) {
  double worst = 0.0;
  for (int sp = 0; sp < mdp.num_states; ++sp) {
    double inflow = 0.0;
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a)
        inflow += mdp.transition(mdp.sa(s, a), sp) * mu.weights(s, a);
    const double lhs = mu.weights.row(sp).sum();
    const double rhs = (1.0 - mdp.discount) * mdp.initial_dist[sp] + mdp.discount * inflow;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

VectorXd value_iteration(const Mdp& mdp, double tol, int max_iterations) {
  VectorXd v = VectorXd::Zero(mdp.num_states);
  VectorXd next(mdp.num_states);
  for (int it = 0; it < max_iterations; ++it) {
    for (int s = 0; s < mdp.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.num_actions; ++a) {
        const double qa = mdp.reward(s, a) + mdp.discount * mdp.transition.row(mdp.sa(s, a)).dot(v);
        best = std::max(best, qa);
      }
      next[s] = best;
    }
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    if (diff <= tol) break;
  }
  return v;
}

TabularPolicy greedy_policy(const Mdp& mdp, const VectorXd& v) {
  TabularPolicy pi;
  pi.probs = MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double qa = mdp.reward(s, a) + mdp.discount * mdp.transition.row(mdp.sa(s, a)).dot(v);
      if (qa > best_q) {
        best_q = qa;
        best = a;
      }
    }
    pi.probs(s, best) = 1.0;
  }
  return pi;
}

double optimal_performance(const Mdp& mdp) {
  const VectorXd v = value_iteration(mdp);
  return (1.0 - mdp.discount) * mdp.initial_dist.dot(v);
}

namespace {

void write_value(std::ostream& out, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out << buf;
}

}  // namespace

void write_mdp(std::ostream& out, const Mdp& mdp) {
  out << "mdp " << mdp.num_states << ' ' << mdp.num_actions << ' ';
  write_value(out, mdp.discount);
  out << '\n';
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      write_value(out, mdp.reward(s, a));
      for (int sp = 0; sp < mdp.num_states; ++sp) {
        out << ' ';
        write_value(out, mdp.transition(mdp.sa(s, a), sp));
      }
      out << '\n';
    }
  }
  for (int s = 0; s < mdp.num_states; ++s) {
    if (s > 0) out << ' ';
    write_value(out, mdp.initial_dist[s]);
  }
  out << '\n';
}

Mdp read_mdp(std::istream& in) {
  std::string tag;
  Mdp mdp;
  if (!(in >> tag) || tag != "mdp")
    throw std::invalid_argument("read_mdp: missing 'mdp' header");
  if (!(in >> mdp.num_states >> mdp.num_actions >> mdp.discount))
    throw std::invalid_argument("read_mdp: malformed header line");
  if (mdp.num_states <= 0 || mdp.num_actions <= 0)
    throw std::invalid_argument("read_mdp: non-positive dimensions");
  mdp.transition.resize(mdp.num_states * mdp.num_actions, mdp.num_states);
  mdp.reward.resize(mdp.num_states, mdp.num_actions);
  mdp.initial_dist.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      if (!(in >> mdp.reward(s, a)))
        throw std::invalid_argument("read_mdp: truncated reward/transition block");
      for (int sp = 0; sp < mdp.num_states; ++sp)
        if (!(in >> mdp.transition(mdp.sa(s, a), sp)))
          throw std::invalid_argument("read_mdp: truncated transition row");
    }
  }
  for (int s = 0; s < mdp.num_states; ++s)
    if (!(in >> mdp.initial_dist[s]))
      throw std::invalid_argument("read_mdp: truncated initial distribution");
  return mdp;
}

std::string mdp_to_text(const Mdp& mdp) {
  std::ostringstream oss;
  write_mdp(oss, mdp);
  return oss.str();
}

Mdp mdp_from_text(const std::string& text) {
  std::istringstream iss(text);
  return read_mdp(iss);
}

}  // namespace dapo
