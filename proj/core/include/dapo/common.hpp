#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace dapo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using Rng = std::mt19937_64;

// Shared numeric guard: probabilities are clamped here before any logarithm.
inline constexpr double kProbFloor = 1e-12;

inline double clamped_log(double p) { return std::log(std::max(p, kProbFloor)); }

// Draws an index from an unnormalized-tolerant probability vector using a
// single uniform variate, so runs are reproducible for a fixed Rng stream.
inline int sample_categorical(const VectorXd& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * probs.sum();
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace dapo
