#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "natflow/diffcalc.hpp"
#include "natflow/errors.hpp"
#include "natflow/geometry.hpp"
#include "natflow/random.hpp"
#include "support/corpus.hpp"
#include "support/fd_oracle.hpp"

namespace natflow {
namespace {

using testing::fd_gradient;
using testing::fd_hessian;
using testing::fd_jacobian;
using testing::fd_second_derivatives;
using testing::relative_error;

ScalarField half_square_norm(int dim) {
  return {dim, [](std::span<const Jet> t) {
            Jet acc = 0.0;
            for (const Jet& x : t) acc += 0.5 * square(x);
            return acc;
          }};
}

TEST(Jet, ProductRuleKeepsHessianSymmetric) {
  const JetVector t = seed(Eigen::Vector3d(0.3, -1.2, 2.0), true);
  const Jet y = sin(t[0] * t[1]) * exp(t[2]) / (1.0 + square(t[1]));
  EXPECT_EQ(y.h, y.h.transpose());
}

TEST(Jet, ConstantsCarryNoDerivatives) {
  const Jet c = 3.0;
  EXPECT_TRUE(c.is_constant());
  const Jet x = Jet::variable(2.0, 0, 1, true);
  const Jet y = c * x + c;
  EXPECT_DOUBLE_EQ(y.v, 9.0);
  EXPECT_DOUBLE_EQ(y.g[0], 3.0);
  EXPECT_DOUBLE_EQ(y.h(0, 0), 0.0);
}

TEST(Jet, ElementaryDerivatives) {
  const double x0 = 0.7;
  const Jet x = Jet::variable(x0, 0, 1, true);
  EXPECT_NEAR(tanh(x).g[0], 1.0 - std::tanh(x0) * std::tanh(x0), 1e-15);
  EXPECT_NEAR(log(x).h(0, 0), -1.0 / (x0 * x0), 1e-14);
  EXPECT_NEAR(sqrt(x).h(0, 0), -0.25 * std::pow(x0, -1.5), 1e-14);
  EXPECT_NEAR(cos(x).h(0, 0), -std::cos(x0), 1e-15);
}

TEST(Gradient, HalfSquareNorm) {
  const ParamVector g = gradient(half_square_norm(2), Eigen::Vector2d(3, 4));
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 4.0);
}

TEST(Gradient, ProductRule) {
  const ScalarField f{2, [](std::span<const Jet> t) { return t[0] * t[1]; }};
  const ParamVector g = gradient(f, Eigen::Vector2d(2, 5));
  EXPECT_DOUBLE_EQ(g[0], 5.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Gradient, RejectsWrongDimension) {
  EXPECT_THROW(gradient(half_square_norm(2), Eigen::Vector3d(1, 2, 3)), DomainError);
}

TEST(Gradient, RejectsNonFiniteInput) {
  EXPECT_THROW(gradient(half_square_norm(2), Eigen::Vector2d(1, NAN)), DomainError);
}

TEST(Gradient, RejectsDimensionAboveCap) {
  const ScalarField f = half_square_norm(kMaxDim + 1);
  EXPECT_THROW(gradient(f, ParamVector::Ones(kMaxDim + 1)), DomainError);
}

TEST(Gradient, TanhNetworkMatchesFiniteDifferences) {
  // one hidden unit with bias: f(x) = v tanh(w x + b), squared error on two points
  const ScalarField f{3, [](std::span<const Jet> t) {
                        Jet acc = 0.0;
                        for (double x : {-1.0, 0.5}) {
                          const Jet r = t[2] * tanh(t[0] * x + t[1]) - std::sin(x);
                          acc += 0.5 * square(r);
                        }
                        return acc;
                      }};
  const ParamVector theta = Eigen::Vector3d(0.1, -0.2, 0.3);
  EXPECT_LE(relative_error(gradient(f, theta), fd_gradient(f, theta), 1e-12), 1e-6);
  EXPECT_LE(relative_error(hessian(f, theta), fd_hessian(f, theta), 1e-12), 1e-5);
}

TEST(Hessian, QuadraticFormIsItsMatrix) {
  Matrix a(2, 2);
  a << 2, 1, 1, 3;
  const ScalarField f{2, [a](std::span<const Jet> t) {
                        Jet acc = 0.0;
                        for (int i = 0; i < 2; ++i)
                          for (int j = 0; j < 2; ++j) acc += 0.5 * a(i, j) * t[i] * t[j];
                        return acc;
                      }};
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const Matrix h = hessian(f, rng.uniform_vector(2, -2, 2));
    EXPECT_LE((h - a).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Hessian, Cubic) {
  const ScalarField f{1, [](std::span<const Jet> t) { return t[0] * t[0] * t[0]; }};
  EXPECT_DOUBLE_EQ(hessian(f, Eigen::VectorXd::Constant(1, 2.0))(0, 0), 12.0);
}

TEST(Jacobian, IdentityMap) {
  EXPECT_EQ(jacobian(identity_map(3), Eigen::Vector3d(1, -2, 3)), Matrix::Identity(3, 3));
}

TEST(Jacobian, OrthogonalLinearMap) {
  Rng rng(4);
  const Matrix q = sample_orthogonal(rng, 3);
  const Diffeomorphism g = euclidean(q, Eigen::Vector3d::Zero());
  EXPECT_LE((jacobian(g.forward, Eigen::Vector3d(0.2, 1, -1)) - q).norm(), 1e-15);
}

TEST(Jacobian, PlanarShear) {
  const Matrix j = jacobian(planar_shear(0.5).forward, Eigen::Vector2d(0, 1));
  Matrix expected(2, 2);
  expected << 1, 0, 0.5, 1;
  EXPECT_LE((j - expected).norm(), 1e-15);
}

TEST(SecondDerivatives, AffineMapVanishes) {
  Rng rng(5);
  const Diffeomorphism g = affine(sample_affine_matrix(rng, 3), Eigen::Vector3d(1, 2, 3));
  for (const Matrix& d : second_derivatives(g.forward, Eigen::Vector3d(0.4, -0.1, 2)))
    EXPECT_EQ(d.norm(), 0.0);
}

TEST(SecondDerivatives, PlanarShear) {
  const Diffeomorphism g = planar_shear(0.5);
  const Rank3 at_origin = second_derivatives(g.forward, Eigen::Vector2d(0, 1));
  EXPECT_LE(at_origin[0].norm() + at_origin[1].norm(), 1e-15);
  const Rank3 d = second_derivatives(g.forward, Eigen::Vector2d(std::numbers::pi / 2, 1));
  EXPECT_NEAR(d[1](0, 0), -0.5, 1e-15);
  EXPECT_EQ(d[0].norm(), 0.0);
  EXPECT_EQ(d[1](0, 1), 0.0);
  EXPECT_EQ(d[1](1, 1), 0.0);
}

TEST(Expand, AgreesWithSeparateCalls) {
  for (const auto& [name, f] : testing::scalar_corpus()) {
    const ParamVector theta = ParamVector::Constant(f.dim, 0.3);
    const SecondOrderExpansion e = expand(f, theta);
    EXPECT_EQ(e.value, f(theta)) << name;
    EXPECT_EQ(e.grad, gradient(f, theta)) << name;
    EXPECT_EQ(e.hess, hessian(f, theta)) << name;
  }
}

TEST(Compose, ChainRule) {
  const Diffeomorphism g = planar_shear(0.7);
  const ScalarField f{2, [](std::span<const Jet> t) { return sin(t[0]) * square(t[1]); }};
  const ScalarField fg = compose(f, g.forward);
  const ParamVector theta = Eigen::Vector2d(0.4, -0.9);
  const ParamVector expected =
      jacobian(g.forward, theta).transpose() * gradient(f, g.forward(theta));
  EXPECT_LE((gradient(fg, theta) - expected).norm(), 1e-14);
}

// Every field in the corpus agrees with central differences at ten seeded
// points of the box [-2, 2]^N.
TEST(FiniteDifferenceOracle, ScalarCorpus) {
  for (const auto& [name, f] : testing::scalar_corpus()) {
    Rng rng(mix_seed(2024, f.dim));
    for (int k = 0; k < 10; ++k) {
      const ParamVector theta = rng.uniform_vector(f.dim, -2.0, 2.0);
      EXPECT_LE(relative_error(gradient(f, theta), fd_gradient(f, theta)), 1e-5)
          << name << " gradient at point " << k;
      EXPECT_LE(relative_error(hessian(f, theta), fd_hessian(f, theta)), 1e-5)
          << name << " hessian at point " << k;
    }
  }
}

TEST(FiniteDifferenceOracle, MapCorpus) {
  for (const auto& [name, m] : testing::map_corpus()) {
    Rng rng(mix_seed(2025, m.in_dim));
    for (int k = 0; k < 10; ++k) {
      const ParamVector theta = rng.uniform_vector(m.in_dim, -2.0, 2.0);
      EXPECT_LE(relative_error(jacobian(m, theta), fd_jacobian(m, theta)), 1e-5)
          << name << " jacobian at point " << k;
      const Rank3 d = second_derivatives(m, theta);
      const Rank3 fd = fd_second_derivatives(m, theta);
      for (int l = 0; l < m.out_dim; ++l)
        EXPECT_LE(relative_error(d[l], fd[l]), 1e-5) << name << " second[" << l << "]";
    }
  }
}

TEST(Hessian, IsExactlySymmetric) {
  for (const auto& [name, f] : testing::scalar_corpus()) {
    const Matrix h = hessian(f, ParamVector::LinSpaced(f.dim, -1.0, 1.0));
    EXPECT_EQ(h, h.transpose()) << name;
  }
}

}  // namespace
}  // namespace natflow
