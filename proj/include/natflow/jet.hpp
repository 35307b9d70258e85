#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace natflow {

/// Largest parameter dimension supported anywhere in the project.
inline constexpr int kMaxDim = 16;

/// Truncated second-order Taylor jet: a value together with its gradient and
/// Hessian with respect to up to kMaxDim seed variables.
///
/// Forward-mode arithmetic on jets propagates exact first and second
/// derivatives through any composition of the supported operations. A jet
/// with an empty gradient is a constant. A jet whose Hessian is empty carries
/// first derivatives only, which is what gradient-only callers seed so the
/// O(n^2) work is skipped.
///
/// Every operation keeps the Hessian bit-for-bit symmetric: the updates are
/// sums of symmetric terms and rank-one symmetrized outer products.
struct Jet {
  using Grad = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
  using Hess =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

  double v = 0.0;
  Grad g;
  Hess h;

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: implicit constants are intended

  /// The i-th of `dim` independent variables at `value`.
  static Jet variable(double value, int i, int dim, bool second_order);

  bool is_constant() const { return g.size() == 0; }
  bool has_hessian() const { return h.size() > 0; }
  int dim() const { return static_cast<int>(g.size()); }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(Jet a);

Jet operator+(Jet a, double b);
Jet operator+(double a, Jet b);
Jet operator-(Jet a, double b);
Jet operator-(double a, Jet b);
Jet operator*(Jet a, double b);
Jet operator*(double a, Jet b);
Jet operator/(Jet a, double b);

Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet tanh(const Jet& x);
Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sqrt(const Jet& x);
Jet square(const Jet& x);

/// Apply a scalar function with known value, first and second derivative.
Jet chain(const Jet& x, double f, double df, double d2f);

using JetVector = std::vector<Jet>;

/// Seed `theta` as independent variables.
JetVector seed(const Eigen::VectorXd& theta, bool second_order);
/// Lift `theta` as constants (derivative-free evaluation).
JetVector constants(const Eigen::VectorXd& theta);
Eigen::VectorXd values(std::span<const Jet> xs);

}  // namespace natflow
