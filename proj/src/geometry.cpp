#include "natflow/geometry.hpp"

#include <cmath>

#include "natflow/errors.hpp"
#include "natflow/linalg.hpp"
#include "natflow/random.hpp"

namespace natflow {

namespace {

constexpr double kSingularJacobian = 1e12;
constexpr double kMembershipTol = 1e-8;

VectorMap affine_map(const Matrix& a, const Eigen::VectorXd& offset) {
  const int n = static_cast<int>(a.cols());
  return {n, static_cast<int>(a.rows()), [a, offset](std::span<const Jet> x) {
            JetVector y(a.rows());
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
              Jet acc(offset(i));
              for (Eigen::Index j = 0; j < a.cols(); ++j) {
                if (a(i, j) != 0.0) acc += x[j] * a(i, j);
              }
              y[i] = std::move(acc);
            }
            return y;
          }};
}

// theta = A^{-1} (theta_bar - c), with the inverse matrix supplied.
VectorMap inverse_affine_map(const Matrix& a_inv, const Eigen::VectorXd& offset) {
  const int n = static_cast<int>(a_inv.cols());
  return {n, n, [a_inv, offset](std::span<const Jet> x) {
            JetVector shifted(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) shifted[j] = x[j] - offset(j);
            JetVector y(a_inv.rows());
            for (Eigen::Index i = 0; i < a_inv.rows(); ++i) {
              Jet acc;
              for (Eigen::Index j = 0; j < a_inv.cols(); ++j) {
                if (a_inv(i, j) != 0.0) acc += shifted[j] * a_inv(i, j);
              }
              y[i] = std::move(acc);
            }
            return y;
          }};
}

Jet shear_term(const ShearSpec& spec, std::span<const Jet> prefix, int k) {
  Jet arg;
  for (int j = 0; j < k; ++j) {
    if (spec.weights(k, j) != 0.0) arg += prefix[j] * spec.weights(k, j);
  }
  const Jet phi = spec.profile[k] == ShearSpec::Profile::Sin ? sin(arg) : tanh(arg);
  return phi * spec.beta(k);
}

Matrix invert_checked(const Matrix& j, const ParamVector& where) {
  const double cond = condition_number(j);
  if (!(cond <= kSingularJacobian))
    throw SingularityError("singular reparameterization Jacobian", where, cond);
  return j.inverse();
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Identity:
      return "identity";
    case Family::Translation:
      return "translation";
    case Family::Euclidean:
      return "euclidean";
    case Family::SignedPermutation:
      return "signed-permutation";
    case Family::Affine:
      return "affine";
    case Family::Shear:
      return "shear";
    case Family::Composite:
      return "composite";
  }
  return "composite";
}

Family parse_family(const std::string& name) {
  if (name == "identity") return Family::Identity;
  if (name == "translation") return Family::Translation;
  if (name == "euclidean") return Family::Euclidean;
  if (name == "signed-permutation") return Family::SignedPermutation;
  if (name == "affine") return Family::Affine;
  if (name == "shear") return Family::Shear;
  throw ConfigError("unknown family '" + name + "'");
}

Diffeomorphism Diffeomorphism::inverted() const {
  return {family, inverse, forward};
}

Diffeomorphism compose(const Diffeomorphism& second, const Diffeomorphism& first) {
  return {Family::Composite, compose(second.forward, first.forward),
          compose(first.inverse, second.inverse)};
}

Diffeomorphism identity_diffeomorphism(int dim) {
  return {Family::Identity, identity_map(dim), identity_map(dim)};
}

Diffeomorphism translation(const Eigen::VectorXd& offset) {
  const int n = static_cast<int>(offset.size());
  const Matrix eye = Matrix::Identity(n, n);
  return {Family::Translation, affine_map(eye, offset),
          inverse_affine_map(eye, offset)};
}

Diffeomorphism euclidean(const Matrix& q, const Eigen::VectorXd& offset) {
  const Matrix defect = q * q.transpose() - Matrix::Identity(q.rows(), q.rows());
  if (defect.cwiseAbs().maxCoeff() > 1e-10)
    throw ConfigError("euclidean: matrix is not orthogonal");
  return {Family::Euclidean, affine_map(q, offset),
          inverse_affine_map(q.transpose(), offset)};
}

Diffeomorphism signed_permutation(const Matrix& p, const Eigen::VectorXd& offset) {
  if (signed_permutation_distance(p) != 0.0)
    throw ConfigError("signed-permutation: matrix is not a signed permutation");
  return {Family::SignedPermutation, affine_map(p, offset),
          inverse_affine_map(p.transpose(), offset)};
}

Diffeomorphism affine(const Matrix& a, const Eigen::VectorXd& offset) {
  const Matrix a_inv = invert_checked(a, Eigen::VectorXd::Zero(a.cols()));
  return {Family::Affine, affine_map(a, offset), inverse_affine_map(a_inv, offset)};
}

Diffeomorphism shear(const ShearSpec& spec) {
  const int n = static_cast<int>(spec.beta.size());
  if (spec.weights.rows() != n || spec.weights.cols() != n ||
      static_cast<int>(spec.profile.size()) != n)
    throw ConfigError("shear: inconsistent specification");
  VectorMap fwd{n, n, [spec, n](std::span<const Jet> x) {
                  JetVector y(x.begin(), x.end());
                  for (int k = 1; k < n; ++k) y[k] += shear_term(spec, x, k);
                  return y;
                }};
  // theta_k depends only on theta_bar_k and theta_{<k}, already recovered
  VectorMap inv{n, n, [spec, n](std::span<const Jet> xb) {
                  JetVector x(xb.begin(), xb.end());
                  for (int k = 1; k < n; ++k) x[k] -= shear_term(spec, x, k);
                  return x;
                }};
  return {Family::Shear, std::move(fwd), std::move(inv)};
}

Diffeomorphism planar_shear(double beta) {
  ShearSpec spec;
  spec.beta = Eigen::Vector2d(0.0, beta);
  spec.weights = Matrix::Zero(2, 2);
  spec.weights(1, 0) = 1.0;
  spec.profile = {ShearSpec::Profile::Sin, ShearSpec::Profile::Sin};
  return shear(spec);
}

Matrix sample_orthogonal(Rng& rng, int n) {
  const Matrix z = rng.gaussian_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix signs so that R has a positive diagonal; makes Q Haar-distributed
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

Matrix sample_signed_permutation(Rng& rng, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, perm[i]) = rng.below(2) == 0 ? 1.0 : -1.0;
  return p;
}

Matrix sample_affine_matrix(Rng& rng, int n, double max_condition) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Matrix a = rng.gaussian_matrix(n, n);
    if (condition_number(a) > max_condition) continue;
    const Matrix defect = a.transpose() * a - Matrix::Identity(n, n);
    if (defect.cwiseAbs().maxCoeff() < 0.1) continue;
    return a;
  }
  throw ConfigError("could not sample a well-conditioned affine matrix");
}

ShearSpec sample_shear(Rng& rng, int n) {
  ShearSpec spec;
  spec.beta = Eigen::VectorXd::Zero(n);
  spec.weights = Matrix::Zero(n, n);
  spec.profile.assign(n, ShearSpec::Profile::Sin);
  for (int k = 1; k < n; ++k) {
    spec.beta(k) = rng.uniform(0.3, 0.8);
    for (int j = 0; j < k; ++j)
      spec.weights(k, j) = rng.gaussian() / std::sqrt(static_cast<double>(k));
    // keep the argument from vanishing so the shear is visibly nonlinear
    const double norm = spec.weights.row(k).norm();
    if (norm < 0.5) spec.weights.row(k) *= 0.5 / norm;
    spec.profile[k] = k % 2 == 1 ? ShearSpec::Profile::Sin : ShearSpec::Profile::Tanh;
  }
  return spec;
}

Diffeomorphism sample_diffeomorphism(Family family, int n, std::uint64_t seed) {
  Rng rng(seed);
  switch (family) {
    case Family::Identity:
      return identity_diffeomorphism(n);
    case Family::Translation:
      return translation(rng.uniform_vector(n, -1.0, 1.0));
    case Family::Euclidean: {
      Matrix q = sample_orthogonal(rng, n);
      while (signed_permutation_distance(q) < 1e-3) q = sample_orthogonal(rng, n);
      return euclidean(q, rng.uniform_vector(n, -1.0, 1.0));
    }
    case Family::SignedPermutation: {
      const Matrix p = sample_signed_permutation(rng, n);
      return signed_permutation(p, rng.uniform_vector(n, -1.0, 1.0));
    }
    case Family::Affine: {
      const Matrix a = sample_affine_matrix(rng, n);
      return affine(a, rng.uniform_vector(n, -1.0, 1.0));
    }
    case Family::Shear:
      return shear(sample_shear(rng, n));
    case Family::Composite:
      break;
  }
  throw ConfigError("composite diffeomorphisms cannot be sampled");
}

Eigen::VectorXd OptimizerState::flat() const {
  Eigen::VectorXd out(order() * dim());
  for (int k = 0; k < order(); ++k) out.segment(k * dim(), dim()) = derivs[k];
  return out;
}

Eigen::VectorXd StateVelocity::flat() const {
  if (dderivs.empty()) return {};
  const auto n = dderivs[0].size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(dderivs.size()) * n);
  for (std::size_t k = 0; k < dderivs.size(); ++k)
    out.segment(static_cast<Eigen::Index>(k) * n, n) = dderivs[k];
  return out;
}

Connection flat_connection(int dim) {
  return {dim, [dim](const ParamVector&) {
            return Rank3(dim, Matrix::Zero(dim, dim));
          }};
}

ScalarField pullback_loss(const Diffeomorphism& g, const ScalarField& loss) {
  if (g.dim() != loss.dim) throw ConfigError("pullback_loss: dimension mismatch");
  return compose(loss, g.inverse);
}

Model pullback_model(const Diffeomorphism& g, const Model& model) {
  if (g.dim() != model.param_dim)
    throw ConfigError("pullback_model: dimension mismatch");
  Model out = model;
  out.forward = [inner = model.forward, inv = g.inverse](
                    const Eigen::VectorXd& x, std::span<const Jet> theta_bar) {
    const JetVector theta = inv.eval(theta_bar);
    return inner(x, theta);
  };
  return out;
}

OptimizerState pushforward_state(const Diffeomorphism& g, const OptimizerState& s) {
  if (s.dim() != g.dim()) throw ConfigError("pushforward_state: dimension mismatch");
  if (s.order() < 1 || s.order() > 2)
    throw ConfigError("pushforward_state: order must be 1 or 2");
  OptimizerState out;
  out.time = s.time;
  if (s.order() == 1) {
    out.derivs.push_back(g.forward(s.theta()));
    return out;
  }
  const JetVector x = seed(s.theta(), false);
  const JetVector y = g.forward.eval(x);
  ParamVector theta_bar(g.dim());
  Matrix jac(g.dim(), g.dim());
  for (int l = 0; l < g.dim(); ++l) {
    theta_bar(l) = y[l].v;
    if (y[l].is_constant())
      jac.row(l).setZero();
    else
      jac.row(l) = y[l].g.transpose();
  }
  out.derivs.push_back(theta_bar);
  out.derivs.push_back(jac * s.derivs[1]);
  return out;
}

StateVelocity pushforward_tangent(const Diffeomorphism& g, const OptimizerState& s,
                                  const StateVelocity& v) {
  if (static_cast<int>(v.dderivs.size()) != s.order())
    throw ConfigError("pushforward_tangent: velocity does not match state order");
  StateVelocity out;
  out.condition = v.condition;
  out.truncated = v.truncated;
  if (s.order() == 1) {
    out.dderivs.push_back(jacobian(g.forward, s.theta()) * v.dderivs[0]);
    return out;
  }
  const MapExpansion e = expand(g.forward, s.theta());
  const ParamVector& u = s.derivs[1];
  ParamVector accel = e.jac * v.dderivs[1];
  for (int l = 0; l < g.dim(); ++l) accel(l) += u.dot(e.second[l] * u);
  out.dderivs.push_back(e.jac * v.dderivs[0]);
  out.dderivs.push_back(accel);
  return out;
}

Preconditioner transform_bilinear(const Diffeomorphism& g, const Preconditioner& p,
                                  const ParamVector& theta_bar) {
  // d theta / d theta_bar
  const Matrix back = jacobian(g.inverse, theta_bar);
  const double cond = condition_number(back);
  if (!(cond <= kSingularJacobian))
    throw SingularityError("transform_bilinear: singular Jacobian", theta_bar, cond,
                           "barred");
  Matrix out;
  if (p.variance == Variance::Covariant) {
    out = back.transpose() * p.matrix * back;
  } else {
    const Matrix fwd = back.inverse();
    out = fwd * p.matrix * fwd.transpose();
  }
  // a congruence of a symmetric form is symmetric; remove the roundoff asymmetry
  return {0.5 * (out + out.transpose()), p.variance};
}

Connection pullback_connection(const Diffeomorphism& g) {
  const int n = g.dim();
  return {n, [inv = g.inverse, n](const ParamVector& theta_bar) {
            const MapExpansion e = expand(inv, theta_bar);
            const Matrix fwd = invert_checked(e.jac, theta_bar);
            Rank3 gamma(n, Matrix::Zero(n, n));
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) {
                if (fwd(k, l) != 0.0) gamma[k] += fwd(k, l) * e.second[l];
              }
            return gamma;
          }};
}

Membership naturalizer_membership(const Diffeomorphism& g,
                                  NaturalizerCondition condition,
                                  const std::vector<ParamVector>& samples) {
  Membership out;
  if (samples.empty()) return out;
  const Matrix first = jacobian(g.forward, samples.front());
  const int n = g.dim();
  double violation = 0.0;
  for (const ParamVector& theta : samples) {
    const Matrix jac = jacobian(g.forward, theta);
    violation = std::max(violation, (jac - first).cwiseAbs().maxCoeff());
    switch (condition) {
      case NaturalizerCondition::OrthogonalJacobian:
        violation = std::max(
            violation,
            (jac * jac.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
        break;
      case NaturalizerCondition::SignedPermutation:
        violation = std::max(violation, signed_permutation_distance(jac));
        break;
      case NaturalizerCondition::Affine:
        break;
    }
  }
  out.violation = violation;
  out.member = violation <= kMembershipTol;
  return out;
}

}  // namespace natflow
