#include <gtest/gtest.h>

#include <cmath>

#include "natflow/errors.hpp"
#include "natflow/harness.hpp"
#include "natflow/random.hpp"

namespace natflow {
namespace {

const std::vector<Family> kFamilies = {Family::Translation, Family::Euclidean,
                                       Family::SignedPermutation, Family::Affine,
                                       Family::Shear};

// L(theta) = 1/2 theta^2 as a one-sample linear regression
Problem half_square_problem() {
  Problem p;
  p.model = linear_model(1, 1);
  p.data.inputs = {Eigen::VectorXd::Constant(1, 1.0)};
  p.data.targets = {Eigen::VectorXd::Zero(1)};
  p.output_metric = Matrix::Identity(1, 1);
  return p;
}

OptimizerState at(const ParamVector& theta) {
  OptimizerState s;
  s.derivs = {theta};
  return s;
}

TEST(NaturalityResidual, GradientDescentUnderDoubling) {
  const FlowBuilder gd{Algorithm::Gd, half_square_problem()};
  const Diffeomorphism g = affine(Matrix::Constant(1, 1, 2.0), ParamVector::Zero(1));
  EXPECT_NEAR(naturality_residual(gd, g, at(ParamVector::Ones(1))), 1.5, 1e-9);
}

TEST(NaturalityResidual, AdamUnderUniformScaling) {
  // theta_bar = theta / gamma with gamma = 2: each active component is off by 1/2
  const Problem p = standard_problem(4);
  const FlowBuilder adam{Algorithm::Adam, p};
  const Diffeomorphism g = affine(0.5 * Matrix::Identity(4, 4), ParamVector::Zero(4));
  const ParamVector theta = Eigen::Vector4d(0.3, -0.6, 0.9, 0.4);
  const ParamVector grad = gradient(dataset_loss(p.model, p.data), theta);
  ASSERT_GT(grad.cwiseAbs().minCoeff(), 1e3 * p.epsilon);
  EXPECT_NEAR(naturality_residual(adam, g, at(theta)), 0.5 * std::sqrt(4.0), 1e-3);
}

TEST(NaturalityResidual, OrthogonalSymmetryOfGradientDescent) {
  const FlowBuilder gd{Algorithm::Gd, standard_problem(8)};
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const Diffeomorphism g = sample_diffeomorphism(Family::Euclidean, 8, 100 + k);
    EXPECT_LE(naturality_residual(gd, g, sample_state(rng, 8, 1)), 1e-9);
  }
}

TEST(NaturalityResidual, IdentityChartIsExact) {
  const Problem p = standard_problem(4);
  Rng rng(6);
  for (Algorithm a : all_algorithms()) {
    const FlowBuilder b{a, p};
    const OptimizerState s = sample_state(rng, 4, b.order());
    EXPECT_LE(naturality_residual(b, identity_diffeomorphism(4), s), 1e-12) << to_string(a);
  }
}

TEST(NaturalityResidual, NaturalFlowsUnderShear) {
  const Problem p = standard_problem(4);
  const Diffeomorphism g = sample_diffeomorphism(Family::Shear, 4, 9);
  Rng rng(7);
  for (Algorithm a : {Algorithm::Ngd, Algorithm::Ggn, Algorithm::NewtonCovariant}) {
    const FlowBuilder b{a, p};
    for (int k = 0; k < 4; ++k) {
      const ResidualSample r = naturality_residual_detail(b, g, sample_state(rng, 4, b.order()));
      if (r.condition > kMaxSampleCondition) continue;
      EXPECT_LE(r.residual, kEquivarianceTol) << to_string(a);
    }
  }
}

TEST(NaturalityResidual, ComposedChartsStayNatural) {
  const Problem p = standard_problem(4);
  const Diffeomorphism g = compose(sample_diffeomorphism(Family::Shear, 4, 1),
                                   sample_diffeomorphism(Family::Affine, 4, 2));
  Rng rng(8);
  for (Algorithm a : {Algorithm::Ngd, Algorithm::Agn}) {
    const FlowBuilder b{a, p};
    int checked = 0;
    for (int k = 0; k < 20 && checked < 4; ++k) {
      const ResidualSample r = naturality_residual_detail(b, g, sample_state(rng, 4, b.order()));
      if (r.condition > kMaxSampleCondition || r.truncated) continue;
      EXPECT_LE(r.residual, kEquivarianceTol) << to_string(a);
      ++checked;
    }
    EXPECT_EQ(checked, 4);
  }
}

TEST(Classify, ExpectedVerdicts) {
  const Problem p = standard_problem(4);
  ClassifyOptions options;
  options.trials = 4;
  const auto verdicts = [&](Algorithm a) {
    std::vector<Verdict> out;
    for (const auto& r : classify_equivariance({a, p}, options)) {
      EXPECT_FALSE(r.ambiguous) << to_string(a) << " " << to_string(r.family);
      out.push_back(r.verdict);
    }
    return out;
  };
  const Verdict E = Verdict::Equivariant, V = Verdict::Violated;
  EXPECT_EQ(verdicts(Algorithm::Gd), (std::vector<Verdict>{E, E, E, V, V}));
  EXPECT_EQ(verdicts(Algorithm::Adam), (std::vector<Verdict>{E, V, E, V, V}));
  EXPECT_EQ(verdicts(Algorithm::Newton), (std::vector<Verdict>{E, E, E, E, V}));
  EXPECT_EQ(verdicts(Algorithm::NewtonCovariant), (std::vector<Verdict>{E, E, E, E, E}));
}

TEST(Classify, EmptyFamilyListGivesEmptyReport) {
  ClassifyOptions options;
  options.families.clear();
  EXPECT_TRUE(classify_equivariance({Algorithm::Gd, standard_problem(2)}, options).empty());
}

TEST(Classify, IsDeterministic) {
  ClassifyOptions options;
  options.trials = 3;
  options.seed = 42;
  const FlowBuilder b{Algorithm::Nngd, standard_problem(4)};
  const auto a = classify_equivariance(b, options);
  const auto c = classify_equivariance(b, options);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].max_residual, c[i].max_residual);
    EXPECT_EQ(a[i].mean_residual, c[i].mean_residual);
    EXPECT_EQ(a[i].rejected, c[i].rejected);
  }
}

TEST(Classify, RejectsBadOptions) {
  ClassifyOptions options;
  options.trials = 0;
  EXPECT_THROW(classify_equivariance({Algorithm::Gd, standard_problem(2)}, options), ConfigError);
}

TEST(Table, VerdictsDoNotDependOnSeedOrTrialCount) {
  TableOptions options;
  options.dims = {2, 4};
  std::vector<std::vector<Verdict>> runs;
  for (auto [seed, trials] : {std::pair{0, 1}, std::pair{1, 1}, std::pair{2, 4}}) {
    options.classify.seed = seed;
    options.classify.trials = trials;
    const TableReport t = reproduce_table(options);
    EXPECT_TRUE(t.ok()) << "seed " << seed;
    for (const auto& m : t.mismatches) ADD_FAILURE() << m;
    std::vector<Verdict> v;
    for (const auto& e : t.entries) v.push_back(e.report.verdict);
    runs.push_back(v);
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[0], runs[2]);
}

TEST(Table, ExpectationsAndGroups) {
  for (Family f : kFamilies) {
    EXPECT_TRUE(expected_equivariant(Algorithm::Ngd, f));
    EXPECT_EQ(expected_equivariant(Algorithm::Newton, f), f != Family::Shear);
  }
  EXPECT_FALSE(expected_equivariant(Algorithm::Adam, Family::Euclidean));
  EXPECT_EQ(equivariance_group(Algorithm::Gd), "E(N) = O(N) ⋉ T(N)");
  EXPECT_EQ(equivariance_group(Algorithm::Adam), "B_N ⋉ T(N)");
  EXPECT_EQ(equivariance_group(Algorithm::Agn), "Diff(M)");
}

}  // namespace
}  // namespace natflow
