#pragma once

// Central finite-difference oracles. These deliberately evaluate only plain
// doubles so that they share no code path with the jet arithmetic under test.

#include <Eigen/Dense>

#include "natflow/diffcalc.hpp"

namespace natflow::testing {

inline constexpr double kFdStep = 1e-5;

// Central-difference gradient of a scalar field.
ParamVector fd_gradient(const ScalarField& f, const ParamVector& theta,
                        double h = kFdStep);

// Central differences of the (AD) gradient, symmetrized.
Matrix fd_hessian(const ScalarField& f, const ParamVector& theta, double h = kFdStep);

// Central-difference Jacobian of a vector map.
Matrix fd_jacobian(const VectorMap& m, const ParamVector& theta, double h = kFdStep);

// Central differences of the (AD) Jacobian rows: result[k](i, j) = d2 m_k / di dj.
Rank3 fd_second_derivatives(const VectorMap& m, const ParamVector& theta,
                            double h = kFdStep);

// ||a - b|| / max(||b||, floor). The tiny default floor only guards the
// division when the reference is exactly zero (e.g. second derivatives of an
// affine map).
double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-12);

}  // namespace natflow::testing
