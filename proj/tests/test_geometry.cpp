#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "natflow/errors.hpp"
#include "natflow/geometry.hpp"
#include "natflow/linalg.hpp"
#include "natflow/random.hpp"

namespace natflow {
namespace {

const std::vector<Family> kFamilies = {Family::Translation, Family::Euclidean,
                                       Family::SignedPermutation, Family::Affine,
                                       Family::Shear};

Diffeomorphism doubling(int dim) {
  return affine(2.0 * Matrix::Identity(dim, dim), ParamVector::Zero(dim));
}

ScalarField half_square(int dim) {
  return {dim, [](std::span<const Jet> t) {
            Jet acc = 0.0;
            for (const Jet& x : t) acc += 0.5 * square(x);
            return acc;
          }};
}

OptimizerState first_order(const ParamVector& theta) {
  OptimizerState s;
  s.derivs = {theta};
  return s;
}

OptimizerState second_order(const ParamVector& theta, const ParamVector& u, double xi) {
  OptimizerState s;
  s.time = xi;
  s.derivs = {theta, u};
  return s;
}

TEST(PullbackLoss, Doubling) {
  const ScalarField bar = pullback_loss(doubling(1), half_square(1));
  for (double tb : {-3.0, 0.5, 2.0})
    EXPECT_NEAR(bar(ParamVector::Constant(1, tb)), tb * tb / 8.0, 1e-15);
}

TEST(PullbackLoss, IdentityAndTranslation) {
  const ScalarField loss{2, [](std::span<const Jet> t) { return sin(t[0]) * exp(t[1]); }};
  const ParamVector theta = Eigen::Vector2d(0.3, -0.4);
  EXPECT_EQ(pullback_loss(identity_diffeomorphism(2), loss)(theta), loss(theta));
  const ParamVector c = Eigen::Vector2d(1.0, -2.0);
  EXPECT_NEAR(pullback_loss(translation(c), loss)(theta), loss(theta - c), 1e-15);
}

TEST(PushforwardState, AffineSecondOrder) {
  Rng rng(1);
  const Matrix a = sample_affine_matrix(rng, 3);
  const ParamVector c = Eigen::Vector3d(1, -1, 0.5);
  const OptimizerState s =
      second_order(Eigen::Vector3d(0.2, 0.1, -1), Eigen::Vector3d(1, 2, 3), 0.7);
  const OptimizerState bar = pushforward_state(affine(a, c), s);
  EXPECT_LE((bar.derivs[0] - (a * s.derivs[0] + c)).norm(), 1e-14);
  EXPECT_LE((bar.derivs[1] - a * s.derivs[1]).norm(), 1e-14);
  EXPECT_EQ(bar.time, 0.7);
}

TEST(PushforwardState, ShearVelocity) {
  const OptimizerState bar = pushforward_state(
      planar_shear(0.5), second_order(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), 1));
  EXPECT_NEAR(bar.derivs[1][0], 1.0, 1e-15);
  EXPECT_NEAR(bar.derivs[1][1], 0.5, 1e-15);
}

TEST(PushforwardState, IdentityLeavesStateUnchanged) {
  const OptimizerState s =
      second_order(Eigen::Vector2d(0.3, 1), Eigen::Vector2d(-1, 2), 2.0);
  const OptimizerState bar = pushforward_state(identity_diffeomorphism(2), s);
  EXPECT_EQ(bar.flat(), s.flat());
}

TEST(PushforwardTangent, AffineActsLinearly) {
  Rng rng(2);
  const Matrix a = sample_affine_matrix(rng, 2);
  const OptimizerState s =
      second_order(Eigen::Vector2d(0.5, 0.1), Eigen::Vector2d(1, -1), 1.0);
  StateVelocity v;
  v.dderivs = {Eigen::Vector2d(1, -1), Eigen::Vector2d(0.25, 4)};
  const StateVelocity bar = pushforward_tangent(affine(a, Eigen::Vector2d(3, 3)), s, v);
  EXPECT_LE((bar.dderivs[0] - a * v.dderivs[0]).norm(), 1e-14);
  EXPECT_LE((bar.dderivs[1] - a * v.dderivs[1]).norm(), 1e-14);
}

TEST(PushforwardTangent, ShearCurvatureTerm) {
  const OptimizerState s = second_order(Eigen::Vector2d(std::numbers::pi / 2, 0),
                                        Eigen::Vector2d(1, 0), 1.0);
  StateVelocity v;
  v.dderivs = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0)};
  const StateVelocity bar = pushforward_tangent(planar_shear(0.5), s, v);
  EXPECT_NEAR(bar.dderivs[1][0], 0.0, 1e-15);
  EXPECT_NEAR(bar.dderivs[1][1], -0.5, 1e-15);
}

TEST(TransformBilinear, Doubling) {
  Preconditioner p{Matrix::Identity(1, 1), Variance::Covariant};
  const Preconditioner bar = transform_bilinear(doubling(1), p, ParamVector::Constant(1, 1.0));
  EXPECT_NEAR(bar.matrix(0, 0), 0.25, 1e-15);
  p.variance = Variance::Contravariant;
  EXPECT_NEAR(transform_bilinear(doubling(1), p, ParamVector::Constant(1, 1.0)).matrix(0, 0),
              4.0, 1e-15);
}

TEST(TransformBilinear, OrthogonalKeepsIdentityAndIdentityKeepsAnything) {
  Rng rng(3);
  const Diffeomorphism g = euclidean(sample_orthogonal(rng, 4), ParamVector::Ones(4));
  const Preconditioner id{Matrix::Identity(4, 4), Variance::Covariant};
  EXPECT_LE((transform_bilinear(g, id, ParamVector::Zero(4)).matrix - id.matrix).norm(),
            1e-14);
  const Matrix b = rng.gaussian_matrix(4, 4);
  const Preconditioner p{b * b.transpose(), Variance::Covariant};
  EXPECT_LE((transform_bilinear(identity_diffeomorphism(4), p, ParamVector::Zero(4)).matrix -
             p.matrix)
                .norm(),
            1e-14);
}

TEST(PullbackConnection, AffineIsFlat) {
  Rng rng(4);
  const Diffeomorphism g = affine(sample_affine_matrix(rng, 3), Eigen::Vector3d(1, 0, 0));
  for (const Matrix& gamma : pullback_connection(g).christoffel(Eigen::Vector3d(1, 2, 3)))
    EXPECT_LE(gamma.norm(), 1e-14);
}

TEST(PullbackConnection, PlanarShear) {
  // the barred point whose first coordinate is pi/2
  const Diffeomorphism g = planar_shear(0.5);
  const ParamVector theta_bar = g.forward(Eigen::Vector2d(std::numbers::pi / 2, 0.3));
  const Rank3 gamma = pullback_connection(g).christoffel(theta_bar);
  EXPECT_LE(gamma[0].norm(), 1e-15);
  EXPECT_NEAR(gamma[1](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(gamma[1](0, 1), 0.0, 1e-15);
  EXPECT_NEAR(gamma[1](1, 1), 0.0, 1e-15);
}

TEST(PullbackConnection, IdentityComposition) {
  Rng rng(5);
  const Diffeomorphism g = shear(sample_shear(rng, 3));
  const Diffeomorphism gi = compose(g, identity_diffeomorphism(3));
  const ParamVector theta_bar = Eigen::Vector3d(0.3, -0.8, 1.1);
  const Rank3 a = pullback_connection(g).christoffel(theta_bar);
  const Rank3 b = pullback_connection(gi).christoffel(theta_bar);
  for (int k = 0; k < 3; ++k) EXPECT_LE((a[k] - b[k]).norm(), 1e-15);
}

TEST(NaturalizerMembership, RotationPlusTranslation) {
  const double c = std::cos(std::numbers::pi / 6), s = std::sin(std::numbers::pi / 6);
  Matrix q(2, 2);
  q << c, -s, s, c;
  const Diffeomorphism g = euclidean(q, Eigen::Vector2d(1, 2));
  const std::vector<ParamVector> samples = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1)};
  EXPECT_TRUE(naturalizer_membership(g, NaturalizerCondition::OrthogonalJacobian, samples)
                  .member);
  EXPECT_FALSE(
      naturalizer_membership(g, NaturalizerCondition::SignedPermutation, samples).member);
}

TEST(NaturalizerMembership, DoublingViolatesOrthogonality) {
  const Membership m = naturalizer_membership(
      doubling(2), NaturalizerCondition::OrthogonalJacobian, {Eigen::Vector2d(0.1, 0.2)});
  EXPECT_FALSE(m.member);
  EXPECT_NEAR(m.violation, 3.0, 1e-14);
  EXPECT_TRUE(
      naturalizer_membership(doubling(2), NaturalizerCondition::Affine, {Eigen::Vector2d(0, 0)})
          .member);
}

TEST(NaturalizerMembership, ShearIsNotAffine) {
  const std::vector<ParamVector> samples = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0.5)};
  EXPECT_FALSE(
      naturalizer_membership(planar_shear(0.5), NaturalizerCondition::Affine, samples).member);
}

TEST(Samplers, GroupMembership) {
  Rng rng(6);
  for (int n : {2, 5, 8}) {
    const Matrix q = sample_orthogonal(rng, n);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(n, n)).norm(), 1e-13);
    const Matrix p = sample_signed_permutation(rng, n);
    EXPECT_EQ(signed_permutation_distance(p), 0.0);
    const Matrix a = sample_affine_matrix(rng, n);
    EXPECT_LE(condition_number(a), 50.0);
    const Diffeomorphism sh = shear(sample_shear(rng, n));
    const ParamVector theta = rng.uniform_vector(n, -2, 2);
    EXPECT_NEAR(jacobian(sh.forward, theta).determinant(), 1.0, 1e-12);
  }
}

TEST(Samplers, RejectInvalidParameters) {
  Matrix not_orthogonal = Matrix::Identity(2, 2);
  not_orthogonal(0, 1) = 0.5;
  EXPECT_THROW(euclidean(not_orthogonal, ParamVector::Zero(2)), ConfigError);
  EXPECT_THROW(affine(Matrix::Zero(2, 2), ParamVector::Zero(2)), SingularityError);
  EXPECT_THROW(parse_family("mobius"), ConfigError);
}

// Properties over all sampled families -------------------------------------

TEST(Properties, InverseRoundTrip) {
  for (Family f : kFamilies) {
    for (int n : {2, 4, 8}) {
      const Diffeomorphism g = sample_diffeomorphism(f, n, 21);
      Rng rng(mix_seed(21, n));
      const OptimizerState s = second_order(rng.uniform_vector(n, -1.5, 1.5),
                                            rng.uniform_vector(n, -1.5, 1.5), 0.5);
      const OptimizerState back = pushforward_state(g.inverted(), pushforward_state(g, s));
      EXPECT_LE((back.flat() - s.flat()).norm(), 1e-9) << to_string(f) << " N=" << n;
    }
  }
}

TEST(Properties, PushforwardIsFunctorial) {
  for (Family f1 : kFamilies) {
    for (Family f2 : kFamilies) {
      const Diffeomorphism g1 = sample_diffeomorphism(f1, 3, 31);
      const Diffeomorphism g2 = sample_diffeomorphism(f2, 3, 32);
      const OptimizerState s =
          second_order(Eigen::Vector3d(0.3, -0.7, 1.1), Eigen::Vector3d(1, 0.5, -2), 1.0);
      const OptimizerState direct = pushforward_state(compose(g2, g1), s);
      const OptimizerState stepwise = pushforward_state(g2, pushforward_state(g1, s));
      EXPECT_LE((direct.flat() - stepwise.flat()).norm(), 1e-12);

      StateVelocity v;
      v.dderivs = {Eigen::Vector3d(0.2, 1, -1), Eigen::Vector3d(-0.5, 0.5, 2)};
      const StateVelocity tv = pushforward_tangent(compose(g2, g1), s, v);
      const StateVelocity tv2 =
          pushforward_tangent(g2, pushforward_state(g1, s), pushforward_tangent(g1, s, v));
      EXPECT_LE((tv.flat() - tv2.flat()).norm(), 1e-12);
    }
  }
}

TEST(Properties, TransformPreservesPositiveSemidefiniteness) {
  Rng rng(41);
  for (Family f : kFamilies) {
    const Diffeomorphism g = sample_diffeomorphism(f, 4, 41);
    const Matrix b = rng.gaussian_matrix(4, 2);  // rank-deficient PSD
    for (Variance var : {Variance::Covariant, Variance::Contravariant}) {
      const Preconditioner p{b * b.transpose(), var};
      const Matrix bar =
          transform_bilinear(g, p, rng.uniform_vector(4, -1.5, 1.5)).matrix;
      EXPECT_EQ(bar, bar.transpose());
      EXPECT_GE(min_eigenvalue(bar), -1e-12 * bar.norm());
    }
  }
}

TEST(Properties, GradientTransformsAsCovector) {
  const ScalarField loss{3, [](std::span<const Jet> t) {
                           return sin(t[0]) * t[1] + exp(0.2 * t[2]) * square(t[0] - t[1]);
                         }};
  for (Family f : kFamilies) {
    const Diffeomorphism g = sample_diffeomorphism(f, 3, 51);
    const ParamVector theta = Eigen::Vector3d(0.4, -0.3, 0.9);
    const ParamVector theta_bar = g.forward(theta);
    const ParamVector lhs = gradient(pullback_loss(g, loss), theta_bar);
    const ParamVector rhs =
        jacobian(g.forward, theta).transpose().lu().solve(gradient(loss, theta));
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm())) << to_string(f);
  }
}

TEST(Properties, SamplingIsSeedDeterministic) {
  for (Family f : kFamilies) {
    const ParamVector theta = Eigen::Vector4d(0.1, 0.2, -0.3, 0.4);
    EXPECT_EQ(sample_diffeomorphism(f, 4, 77).forward(theta),
              sample_diffeomorphism(f, 4, 77).forward(theta));
    EXPECT_NE(sample_diffeomorphism(f, 4, 77).forward(theta),
              sample_diffeomorphism(f, 4, 78).forward(theta));
  }
}

}  // namespace
}  // namespace natflow
