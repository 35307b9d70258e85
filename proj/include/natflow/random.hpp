#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace natflow {

// All randomness in the project goes through this generator: std::mt19937_64
// (whose output sequence is fixed by the C++ standard) with the uniform and
// Gaussian transforms below written out by hand. The standard library
// distributions are implementation-defined, so they are never used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per call, no caching).
  double gaussian();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd uniform_vector(int n, double lo, double hi);
  Eigen::MatrixXd gaussian_matrix(int rows, int cols);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace natflow
