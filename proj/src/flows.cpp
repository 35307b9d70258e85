#include "natflow/flows.hpp"

#include <cmath>

#include "natflow/errors.hpp"
#include "natflow/linalg.hpp"

namespace natflow {

namespace {

void require_order(const OptimizerState& s, int order, const char* who) {
  if (s.order() != order)
    throw ConfigError(std::string(who) + ": state has order " +
                      std::to_string(s.order()) + ", expected " +
                      std::to_string(order));
}

double damping_time(double xi) {
  if (xi < 0.0) throw DomainError("flow time must be nonnegative");
  return std::max(xi, kXiMin);
}

// -P^{-1} g (covariant) or -P g (contravariant)
StateVelocity precondition(const Preconditioner& p, const ParamVector& grad) {
  StateVelocity v;
  if (p.variance == Variance::Contravariant) {
    v.dderivs.push_back(-(p.matrix * grad));
    return v;
  }
  const SolveResult solve = pseudo_solve(p.matrix, grad);
  v.dderivs.push_back(-solve.x);
  v.condition = solve.condition;
  v.truncated = solve.truncated;
  return v;
}

ParamVector christoffel_contract(const Rank3& gamma, const ParamVector& u) {
  ParamVector out(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) out(k) = u.dot(gamma[k] * u);
  return out;
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Gd:
      return "gd";
    case Algorithm::Nesterov:
      return "nesterov";
    case Algorithm::Adam:
      return "adam";
    case Algorithm::Newton:
      return "newton";
    case Algorithm::NewtonCovariant:
      return "newton-covariant";
    case Algorithm::Ngd:
      return "ngd";
    case Algorithm::Ggn:
      return "ggn";
    case Algorithm::Nngd:
      return "nngd";
    case Algorithm::Agn:
      return "agn";
  }
  return "gd";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : all_algorithms())
    if (to_string(a) == name) return a;
  throw ConfigError("unknown algorithm '" + name + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {
      Algorithm::Gd,  Algorithm::Nesterov, Algorithm::Adam,
      Algorithm::Newton, Algorithm::NewtonCovariant, Algorithm::Ngd,
      Algorithm::Ggn, Algorithm::Nngd,    Algorithm::Agn};
  return all;
}

FlowField gradient_flow(const ScalarField& loss) {
  return {Algorithm::Gd, 1, true, [loss](const OptimizerState& s) {
            require_order(s, 1, "gradient_flow");
            StateVelocity v;
            v.dderivs.push_back(-gradient(loss, s.theta()));
            return v;
          }};
}

FlowField nesterov_flow(const ScalarField& loss) {
  return {Algorithm::Nesterov, 2, false, [loss](const OptimizerState& s) {
            require_order(s, 2, "nesterov_flow");
            const double xi = damping_time(s.time);
            const ParamVector& u = s.derivs[1];
            StateVelocity v;
            v.dderivs.push_back(u);
            v.dderivs.push_back(-(3.0 / xi) * u - gradient(loss, s.theta()));
            return v;
          }};
}

FlowField adam_stationary_flow(const ScalarField& loss, double epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("adam: epsilon must be nonnegative");
  return {Algorithm::Adam, 1, true, [loss, epsilon](const OptimizerState& s) {
            require_order(s, 1, "adam_stationary_flow");
            const ParamVector g = gradient(loss, s.theta());
            ParamVector out(g.size());
            for (Eigen::Index i = 0; i < g.size(); ++i) {
              const double denom = std::abs(g(i)) + epsilon;
              out(i) = denom == 0.0 ? 0.0 : -g(i) / denom;
            }
            StateVelocity v;
            v.dderivs.push_back(out);
            return v;
          }};
}

Matrix covariant_hessian(const ScalarField& loss, const Connection& connection,
                         const ParamVector& theta) {
  const SecondOrderExpansion e = expand(loss, theta);
  const Rank3 gamma = connection.christoffel(theta);
  Matrix h = e.hess;
  for (Eigen::Index k = 0; k < theta.size(); ++k) h -= e.grad(k) * gamma[k];
  return h;
}

FlowField newton_flow(const ScalarField& loss,
                      const std::optional<Connection>& connection) {
  const Algorithm tag = connection ? Algorithm::NewtonCovariant : Algorithm::Newton;
  return {tag, 1, true, [loss, connection](const OptimizerState& s) {
            require_order(s, 1, "newton_flow");
            const SecondOrderExpansion e = expand(loss, s.theta());
            Matrix h = e.hess;
            if (connection) {
              const Rank3 gamma = connection->christoffel(s.theta());
              for (Eigen::Index k = 0; k < e.grad.size(); ++k) h -= e.grad(k) * gamma[k];
            }
            const SolveResult solve = pseudo_solve(h, e.grad, 0.0);
            if (!(solve.condition <= kNewtonMaxCondition))
              throw SingularityError("newton: Hessian is singular", s.theta(),
                                     solve.condition);
            StateVelocity v;
            v.dderivs.push_back(-solve.x);
            v.condition = solve.condition;
            return v;
          }};
}

Preconditioner ggn_matrix(const Model& model, const Dataset& data, const Matrix& m,
                          const ParamVector& theta) {
  if (m.rows() != model.output_dim || m.cols() != model.output_dim)
    throw ConfigError("ggn_matrix: output metric has the wrong shape");
  if (theta.size() != model.param_dim)
    throw ConfigError("ggn_matrix: parameter dimension mismatch");
  const std::vector<Matrix> jacs = network_jacobian(model, data, theta);
  Matrix g = Matrix::Zero(model.param_dim, model.param_dim);
  for (const Matrix& j : jacs) g += j.transpose() * m * j;
  g /= static_cast<double>(jacs.size());
  return {0.5 * (g + g.transpose()), Variance::Covariant};
}

Preconditioner fisher_matrix(const GaussianHead& head, const Dataset& data,
                             const ParamVector& theta) {
  if (!(head.noise_variance > 0.0))
    throw ConfigError("fisher_matrix: noise variance must be positive");
  const Matrix m = Matrix::Identity(head.model.output_dim, head.model.output_dim) /
                   head.noise_variance;
  return ggn_matrix(head.model, data, m, theta);
}

FlowField preconditioned_flow(const ScalarField& loss, PreconditionerField p,
                              Algorithm tag) {
  return {tag, 1, true, [loss, p = std::move(p)](const OptimizerState& s) {
            require_order(s, 1, "preconditioned_flow");
            return precondition(p(s.theta()), gradient(loss, s.theta()));
          }};
}

FlowField accelerated_flow(const ScalarField& loss, PreconditionerField p, double r,
                           const std::optional<Connection>& connection,
                           Algorithm tag) {
  if (!(r > 0.0)) throw ConfigError("accelerated_flow: r must be positive");
  return {tag, 2, false,
          [loss, p = std::move(p), r, connection](const OptimizerState& s) {
            require_order(s, 2, "accelerated_flow");
            const double xi = damping_time(s.time);
            const ParamVector& u = s.derivs[1];
            StateVelocity pre = precondition(p(s.theta()), gradient(loss, s.theta()));
            ParamVector accel = -(r / xi) * u + pre.dderivs[0];
            if (connection) accel -= christoffel_contract(connection->christoffel(s.theta()), u);
            StateVelocity v;
            v.dderivs.push_back(u);
            v.dderivs.push_back(accel);
            v.condition = pre.condition;
            v.truncated = pre.truncated;
            return v;
          }};
}

}  // namespace natflow
