#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "natflow/diffcalc.hpp"
#include "natflow/models.hpp"

namespace natflow {

class Rng;

enum class Family {
  Identity,
  Translation,
  Euclidean,
  SignedPermutation,
  Affine,
  Shear,
  Composite
};

std::string to_string(Family family);
/// Accepts the config spellings: translation, euclidean, signed-permutation,
/// affine, shear, identity. Throws ConfigError otherwise.
Family parse_family(const std::string& name);

/// A reparameterization theta_bar = forward(theta) with its exact inverse.
struct Diffeomorphism {
  Family family = Family::Identity;
  VectorMap forward;
  VectorMap inverse;

  int dim() const { return forward.in_dim; }
  Diffeomorphism inverted() const;
};

/// second ∘ first
Diffeomorphism compose(const Diffeomorphism& second, const Diffeomorphism& first);

Diffeomorphism identity_diffeomorphism(int dim);
Diffeomorphism translation(const Eigen::VectorXd& offset);
/// theta_bar = Q theta + c. Q must be orthogonal to 1e-10.
Diffeomorphism euclidean(const Matrix& q, const Eigen::VectorXd& offset);
/// theta_bar = P theta + c. P must be a signed permutation.
Diffeomorphism signed_permutation(const Matrix& p, const Eigen::VectorXd& offset);
/// theta_bar = A theta + c with A invertible.
Diffeomorphism affine(const Matrix& a, const Eigen::VectorXd& offset);

/// Triangular shear: theta_bar_k = theta_k + beta_k * phi_k(w_k . theta_{<k}),
/// phi_k in {sin, tanh}. Row k of `weights` uses only columns j < k and row 0
/// is ignored. Inverse is solved forward in k, exactly.
struct ShearSpec {
  enum class Profile { Sin, Tanh };
  Eigen::VectorXd beta;
  Matrix weights;
  std::vector<Profile> profile;
};
Diffeomorphism shear(const ShearSpec& spec);
/// The two-dimensional shear (theta_1, theta_2 + beta sin theta_1).
Diffeomorphism planar_shear(double beta);

// Random group elements, all drawn through natflow::Rng.
Matrix sample_orthogonal(Rng& rng, int n);
Matrix sample_signed_permutation(Rng& rng, int n);
/// Gaussian matrix with condition number <= max_condition that is also
/// visibly non-orthogonal (max |A^T A - I| >= 0.1).
Matrix sample_affine_matrix(Rng& rng, int n, double max_condition = 50.0);
ShearSpec sample_shear(Rng& rng, int n);

/// Seeded catalog entry. Euclidean samples exclude rotations within 1e-3 of a
/// signed permutation. Translations are added for every family but shear.
Diffeomorphism sample_diffeomorphism(Family family, int n, std::uint64_t seed);

/// [theta, d theta/d xi, ...] at flow time `time`.
struct OptimizerState {
  double time = 0.0;
  std::vector<ParamVector> derivs;

  int order() const { return static_cast<int>(derivs.size()); }
  int dim() const { return derivs.empty() ? 0 : static_cast<int>(derivs[0].size()); }
  const ParamVector& theta() const { return derivs.front(); }
  Eigen::VectorXd flat() const;
};

/// xi-derivative of each state entry, with solver diagnostics.
struct StateVelocity {
  std::vector<ParamVector> dderivs;
  double condition = 1.0;  // worst condition number of any matrix solved
  bool truncated = false;  // pseudo-inverse dropped singular directions

  Eigen::VectorXd flat() const;
};

enum class Variance { Covariant, Contravariant };

struct Preconditioner {
  Matrix matrix;
  Variance variance = Variance::Covariant;
};

/// Christoffel symbols Gamma[k](i, j) of a torsion-free connection.
struct Connection {
  int dim = 0;
  std::function<Rank3(const ParamVector&)> christoffel;
};

Connection flat_connection(int dim);

/// L_bar(theta_bar) = L(g^{-1}(theta_bar)).
ScalarField pullback_loss(const Diffeomorphism& g, const ScalarField& loss);
/// f_bar(x, theta_bar) = f(x, g^{-1}(theta_bar)).
Model pullback_model(const Diffeomorphism& g, const Model& model);

OptimizerState pushforward_state(const Diffeomorphism& g, const OptimizerState& s);
StateVelocity pushforward_tangent(const Diffeomorphism& g, const OptimizerState& s,
                                  const StateVelocity& v);

/// Components of G in the barred chart at theta_bar.
Preconditioner transform_bilinear(const Diffeomorphism& g, const Preconditioner& p,
                                  const ParamVector& theta_bar);

/// The flat connection of the unbarred chart, expressed in barred coordinates:
/// Gamma_bar^k_ij = d theta_bar^k / d theta^l * d^2 theta^l / d theta_bar^i d theta_bar^j.
Connection pullback_connection(const Diffeomorphism& g);

enum class NaturalizerCondition { OrthogonalJacobian, SignedPermutation, Affine };

struct Membership {
  bool member = false;
  double violation = 0.0;
};

/// Checks the Jacobian condition at every sample and that the Jacobian is the
/// same at all samples, to tolerance 1e-8.
Membership naturalizer_membership(const Diffeomorphism& g,
                                  NaturalizerCondition condition,
                                  const std::vector<ParamVector>& samples);

}  // namespace natflow
