#include "natflow/diffcalc.hpp"

#include <cmath>
#include <string>

#include "natflow/errors.hpp"

namespace natflow {

namespace {

void check_dim(int expected, const ParamVector& theta) {
  if (theta.size() != expected)
    throw DomainError("dimension mismatch: expected " +
                      std::to_string(expected) + ", got " +
                      std::to_string(theta.size()));
  if (expected > kMaxDim)
    throw DomainError("dimension " + std::to_string(expected) +
                      " exceeds the cap of " + std::to_string(kMaxDim));
}

void check_finite(const Jet& y, const char* what) {
  bool ok = std::isfinite(y.v);
  if (ok && !y.is_constant()) ok = y.g.allFinite();
  if (ok && y.has_hessian()) ok = y.h.allFinite();
  if (!ok) throw DomainError(std::string("non-finite ") + what);
}

// Pad derivative-free outputs (constant components) to full shape.
ParamVector grad_of(const Jet& y, int n) {
  return y.is_constant() ? ParamVector::Zero(n) : ParamVector(y.g);
}

Matrix hess_of(const Jet& y, int n) {
  if (!y.has_hessian()) return Matrix::Zero(n, n);
  Matrix h = y.h;
  // already symmetric by construction; this makes it a hard guarantee
  return 0.5 * (h + h.transpose());
}

}  // namespace

double ScalarField::operator()(const ParamVector& theta) const {
  check_dim(dim, theta);
  const JetVector x = constants(theta);
  return eval(x).v;
}

ParamVector VectorMap::operator()(const ParamVector& theta) const {
  check_dim(in_dim, theta);
  const JetVector x = constants(theta);
  return values(eval(x));
}

VectorMap identity_map(int dim) {
  return {dim, dim, [](std::span<const Jet> x) {
            return JetVector(x.begin(), x.end());
          }};
}

VectorMap compose(const VectorMap& outer, const VectorMap& inner) {
  if (outer.in_dim != inner.out_dim)
    throw DomainError("compose: dimension mismatch");
  return {inner.in_dim, outer.out_dim,
          [outer, inner](std::span<const Jet> x) {
            const JetVector mid = inner.eval(x);
            return outer.eval(mid);
          }};
}

ScalarField compose(const ScalarField& f, const VectorMap& m) {
  if (f.dim != m.out_dim) throw DomainError("compose: dimension mismatch");
  return {m.in_dim, [f, m](std::span<const Jet> x) {
            const JetVector mid = m.eval(x);
            return f.eval(mid);
          }};
}

ParamVector gradient(const ScalarField& f, const ParamVector& theta) {
  check_dim(f.dim, theta);
  const JetVector x = seed(theta, false);
  const Jet y = f.eval(x);
  check_finite(y, "gradient");
  return grad_of(y, f.dim);
}

Matrix hessian(const ScalarField& f, const ParamVector& theta) {
  return expand(f, theta).hess;
}

SecondOrderExpansion expand(const ScalarField& f, const ParamVector& theta) {
  check_dim(f.dim, theta);
  const JetVector x = seed(theta, true);
  const Jet y = f.eval(x);
  check_finite(y, "hessian");
  return {y.v, grad_of(y, f.dim), hess_of(y, f.dim)};
}

Matrix jacobian(const VectorMap& m, const ParamVector& theta) {
  check_dim(m.in_dim, theta);
  const JetVector x = seed(theta, false);
  const JetVector y = m.eval(x);
  Matrix jac(m.out_dim, m.in_dim);
  for (int l = 0; l < m.out_dim; ++l) {
    check_finite(y[l], "jacobian");
    jac.row(l) = grad_of(y[l], m.in_dim).transpose();
  }
  return jac;
}

Rank3 second_derivatives(const VectorMap& m, const ParamVector& theta) {
  return expand(m, theta).second;
}

MapExpansion expand(const VectorMap& m, const ParamVector& theta) {
  check_dim(m.in_dim, theta);
  const JetVector x = seed(theta, true);
  const JetVector y = m.eval(x);
  MapExpansion out{ParamVector(m.out_dim), Matrix(m.out_dim, m.in_dim), {}};
  out.second.reserve(m.out_dim);
  for (int l = 0; l < m.out_dim; ++l) {
    check_finite(y[l], "second derivative");
    out.value(l) = y[l].v;
    out.jac.row(l) = grad_of(y[l], m.in_dim).transpose();
    out.second.push_back(hess_of(y[l], m.in_dim));
  }
  return out;
}

}  // namespace natflow
