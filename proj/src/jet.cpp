#include "natflow/jet.hpp"

#include <cassert>
#include <cmath>

namespace natflow {

namespace {

// Give a constant the derivative shape of `like` so mixed operations can use
// a single code path.
void promote(Jet& c, const Jet& like) {
  c.g = Jet::Grad::Zero(like.dim());
  if (like.has_hessian()) c.h = Jet::Hess::Zero(like.dim(), like.dim());
}

void align(Jet& a, const Jet& b) {
  if (a.is_constant() && !b.is_constant()) promote(a, b);
  assert(b.is_constant() || a.dim() == b.dim());
}

}  // namespace

Jet Jet::variable(double value, int i, int dim, bool second_order) {
  Jet x(value);
  x.g = Grad::Zero(dim);
  x.g(i) = 1.0;
  if (second_order) x.h = Hess::Zero(dim, dim);
  return x;
}

Jet& Jet::operator+=(const Jet& o) {
  v += o.v;
  if (o.is_constant()) return *this;
  align(*this, o);
  g += o.g;
  if (has_hessian()) h += o.h;
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  v -= o.v;
  if (o.is_constant()) return *this;
  align(*this, o);
  g -= o.g;
  if (has_hessian()) h -= o.h;
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }

Jet operator*(const Jet& a, const Jet& b) {
  if (b.is_constant()) return a * b.v;
  if (a.is_constant()) return b * a.v;
  Jet r(a.v * b.v);
  r.g = a.v * b.g + b.v * a.g;
  if (a.has_hessian()) {
    const Jet::Hess cross = a.g * b.g.transpose();
    r.h = a.v * b.h + b.v * a.h;
    r.h += cross + cross.transpose();
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.is_constant()) return a * (1.0 / b.v);
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Jet operator-(Jet a) {
  a.v = -a.v;
  a.g = -a.g;
  a.h = -a.h;
  return a;
}

Jet operator+(Jet a, double b) {
  a.v += b;
  return a;
}
Jet operator+(double a, Jet b) { return std::move(b) + a; }
Jet operator-(Jet a, double b) {
  a.v -= b;
  return a;
}
Jet operator-(double a, Jet b) { return -std::move(b) + a; }

Jet operator*(Jet a, double b) {
  a.v *= b;
  a.g *= b;
  a.h *= b;
  return a;
}
Jet operator*(double a, Jet b) { return std::move(b) * a; }
Jet operator/(Jet a, double b) { return std::move(a) * (1.0 / b); }

Jet chain(const Jet& x, double f, double df, double d2f) {
  Jet r(f);
  if (x.is_constant()) return r;
  r.g = df * x.g;
  if (x.has_hessian()) {
    r.h = df * x.h;
    r.h.noalias() += d2f * (x.g * x.g.transpose());
  }
  return r;
}

Jet sin(const Jet& x) {
  const double s = std::sin(x.v);
  return chain(x, s, std::cos(x.v), -s);
}

Jet cos(const Jet& x) {
  const double c = std::cos(x.v);
  return chain(x, c, -std::sin(x.v), -c);
}

Jet tanh(const Jet& x) {
  const double t = std::tanh(x.v);
  const double sech2 = 1.0 - t * t;
  return chain(x, t, sech2, -2.0 * t * sech2);
}

Jet exp(const Jet& x) {
  const double e = std::exp(x.v);
  return chain(x, e, e, e);
}

Jet log(const Jet& x) {
  return chain(x, std::log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v));
}

Jet sqrt(const Jet& x) {
  const double s = std::sqrt(x.v);
  return chain(x, s, 0.5 / s, -0.25 / (s * x.v));
}

Jet square(const Jet& x) { return chain(x, x.v * x.v, 2.0 * x.v, 2.0); }

JetVector seed(const Eigen::VectorXd& theta, bool second_order) {
  const int n = static_cast<int>(theta.size());
  JetVector out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(Jet::variable(theta(i), i, n, second_order));
  return out;
}

JetVector constants(const Eigen::VectorXd& theta) {
  return JetVector(theta.data(), theta.data() + theta.size());
}

Eigen::VectorXd values(std::span<const Jet> xs) {
  Eigen::VectorXd out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out(i) = xs[i].v;
  return out;
}

}  // namespace natflow
