#include "natflow/linalg.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace natflow {

SolveResult pseudo_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double cutoff) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  SolveResult out;
  out.x = Eigen::VectorXd::Zero(a.cols());
  if (s.size() == 0 || s(0) == 0.0) {
    out.condition = std::numeric_limits<double>::infinity();
    out.truncated = true;
    return out;
  }
  const double smin = s(s.size() - 1);
  out.condition = smin > 0.0 ? s(0) / smin
                             : std::numeric_limits<double>::infinity();
  const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) < cutoff * s(0)) {
      out.truncated = true;
      continue;
    }
    out.x += svd.matrixV().col(k) * (utb(k) / s(k));
  }
  return out;
}

double condition_number(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric,
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double signed_permutation_distance(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  std::vector<bool> used(n, false);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, q.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    q.row(i).cwiseAbs().maxCoeff(&j);
    if (used[j]) return std::numeric_limits<double>::infinity();
    used[j] = true;
    p(i, j) = q(i, j) >= 0.0 ? 1.0 : -1.0;
  }
  return (q - p).cwiseAbs().maxCoeff();
}

}  // namespace natflow
