#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "natflow/jet.hpp"

namespace natflow {

using ParamVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// D[l](i, j) = d^2 m^l / d theta^i d theta^j.
using Rank3 = std::vector<Matrix>;

/// A loss-like scalar function of the parameters, written once over jets so
/// that values, gradients and Hessians all come from the same expression.
struct ScalarField {
  int dim = 0;
  std::function<Jet(std::span<const Jet>)> eval;

  double operator()(const ParamVector& theta) const;
};

/// A smooth map R^in -> R^out (networks, reparameterizations).
struct VectorMap {
  int in_dim = 0;
  int out_dim = 0;
  std::function<JetVector(std::span<const Jet>)> eval;

  ParamVector operator()(const ParamVector& theta) const;
};

VectorMap identity_map(int dim);
/// outer ∘ inner
VectorMap compose(const VectorMap& outer, const VectorMap& inner);
/// f ∘ m
ScalarField compose(const ScalarField& f, const VectorMap& m);

// Exact derivatives. Each throws DomainError when the value or a derivative
// is not finite, or when theta has the wrong size.
ParamVector gradient(const ScalarField& f, const ParamVector& theta);
Matrix hessian(const ScalarField& f, const ParamVector& theta);
Matrix jacobian(const VectorMap& m, const ParamVector& theta);
Rank3 second_derivatives(const VectorMap& m, const ParamVector& theta);

/// Value, gradient and Hessian from one sweep.
struct SecondOrderExpansion {
  double value = 0.0;
  ParamVector grad;
  Matrix hess;
};
SecondOrderExpansion expand(const ScalarField& f, const ParamVector& theta);

/// Jacobian and second derivatives from one sweep.
struct MapExpansion {
  ParamVector value;
  Matrix jac;
  Rank3 second;
};
MapExpansion expand(const VectorMap& m, const ParamVector& theta);

}  // namespace natflow
