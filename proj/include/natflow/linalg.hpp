#pragma once

#include <Eigen/Dense>

namespace natflow {

/// Relative singular-value cutoff for pseudo-inverses.
inline constexpr double kPinvCutoff = 1e-10;

struct SolveResult {
  Eigen::VectorXd x;
  double condition = 1.0;  // sigma_max / sigma_min (inf when singular)
  bool truncated = false;  // some singular values fell below the cutoff
};

/// Minimum-norm least-squares solution of A x = b through the SVD, dropping
/// singular values below cutoff * sigma_max.
SolveResult pseudo_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double cutoff = kPinvCutoff);

double condition_number(const Eigen::MatrixXd& a);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// max_ij |Q - P| for the signed permutation P closest to Q; returns +inf
/// when the dominant entries of Q do not form a permutation.
double signed_permutation_distance(const Eigen::MatrixXd& q);

}  // namespace natflow
