#pragma once

#include <functional>
#include <optional>
#include <string>

#include "natflow/geometry.hpp"
#include "natflow/models.hpp"

namespace natflow {

/// Lower clamp on flow time for the 1/xi damping of the second-order flows.
/// Trajectories of those flows start at xi = kXiMin.
inline constexpr double kXiMin = 1e-3;
/// Newton refuses Hessians worse conditioned than this.
inline constexpr double kNewtonMaxCondition = 1e12;

enum class Algorithm { Gd, Nesterov, Adam, Newton, NewtonCovariant, Ngd, Ggn, Nngd, Agn };

std::string to_string(Algorithm algorithm);
/// Config spellings: gd, nesterov, adam, newton, newton-covariant, ngd, ggn,
/// nngd, agn. Throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

/// Right-hand side of the limiting ODE  s' = eta(s).
struct FlowField {
  Algorithm algorithm = Algorithm::Gd;
  int order = 1;
  bool autonomous = true;
  std::function<StateVelocity(const OptimizerState&)> eval;

  StateVelocity operator()(const OptimizerState& s) const { return eval(s); }
};

using PreconditionerField = std::function<Preconditioner(const ParamVector&)>;

struct GaussianHead {
  Model model;
  double noise_variance = 1.0;
};

FlowField gradient_flow(const ScalarField& loss);

/// u' = -(3 / xi) u - grad L. Throws DomainError for xi < 0.
FlowField nesterov_flow(const ScalarField& loss);

/// Full-batch Adam with stationary moment estimates: the componentwise
/// -g / (|g| + eps) sign flow.
FlowField adam_stationary_flow(const ScalarField& loss, double epsilon = 1e-8);

/// H_ij - Gamma^k_ij dL/dtheta^k
Matrix covariant_hessian(const ScalarField& loss, const Connection& connection,
                         const ParamVector& theta);

/// -H^{-1} grad L. With a connection the covariant Hessian is used. Throws
/// SingularityError when cond(H) > kNewtonMaxCondition.
FlowField newton_flow(const ScalarField& loss,
                      const std::optional<Connection>& connection = std::nullopt);

/// (1/|S|) sum J^T M J over the dataset, in dataset order.
Preconditioner ggn_matrix(const Model& model, const Dataset& data, const Matrix& m,
                          const ParamVector& theta);

/// Fisher information of the Gaussian head, which is the GGN with M = I / sigma^2.
Preconditioner fisher_matrix(const GaussianHead& head, const Dataset& data,
                             const ParamVector& theta);

/// -P(theta)^{-1} grad L for covariant P (pseudo-inverse when rank deficient),
/// -P(theta) grad L for contravariant P.
FlowField preconditioned_flow(const ScalarField& loss, PreconditionerField p,
                              Algorithm tag = Algorithm::Ngd);

/// u' = -(r / xi) u - P^{-1} grad L - Gamma(u, u). The connection term makes
/// the acceleration covariant; omit it in a flat chart.
FlowField accelerated_flow(const ScalarField& loss, PreconditionerField p,
                           double r = 3.0,
                           const std::optional<Connection>& connection = std::nullopt,
                           Algorithm tag = Algorithm::Nngd);

}  // namespace natflow
