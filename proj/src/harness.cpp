#include "natflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "natflow/errors.hpp"
#include "natflow/random.hpp"

namespace natflow {

namespace {

// stream tags for seed derivation
constexpr std::uint64_t kTagDiffeo = 0x6469666665;
constexpr std::uint64_t kTagStates = 0x7374617465;
constexpr int kMaxRejections = 1000;

std::uint64_t trial_seed(std::uint64_t seed, int dim, Family family, int trial,
                         std::uint64_t tag) {
  std::uint64_t s = mix_seed(seed, tag);
  s = mix_seed(s, static_cast<std::uint64_t>(dim));
  s = mix_seed(s, static_cast<std::uint64_t>(family));
  return mix_seed(s, static_cast<std::uint64_t>(trial));
}

}  // namespace

Problem standard_problem(int dim) {
  MlpShape shape;
  double range = 2.0;
  switch (dim) {
    case 2:
      shape = {1, 1, 1, false, false};
      range = 1.0;
      break;
    case 3:
      shape = {1, 1, 1, true, false};
      break;
    case 4:
      shape = {2, 1, 1, true, false};
      break;
    case 6:
      shape = {4, 1, 1, true, false};
      break;
    case 8:
      shape = {3, 1, 2, true, true};
      break;
    case 16:
      shape = {5, 2, 2, true, false};
      break;
    default:
      throw ConfigError("no standard problem with " + std::to_string(dim) +
                        " parameters");
  }
  Problem p;
  p.model = mlp_tanh(shape);
  p.data = wave_dataset(16, shape.inputs, shape.outputs, range);
  if (shape.outputs == 1) {
    p.output_metric = Matrix::Constant(1, 1, 2.0);
  } else {
    p.output_metric = Matrix(2, 2);
    p.output_metric << 2.0, 0.5, 0.5, 1.0;
  }
  return p;
}

FlowField FlowBuilder::build(const std::optional<Diffeomorphism>& chart) const {
  ScalarField loss = dataset_loss(problem.model, problem.data);
  Model model = problem.model;
  std::optional<Connection> connection;
  if (chart) {
    loss = pullback_loss(*chart, loss);
    model = pullback_model(*chart, model);
    connection = pullback_connection(*chart);
  }
  const Dataset& data = problem.data;
  auto fisher = [head = GaussianHead{model, problem.noise_variance},
                 data](const ParamVector& theta) {
    return fisher_matrix(head, data, theta);
  };
  auto ggn = [model, data, m = problem.output_metric](const ParamVector& theta) {
    return ggn_matrix(model, data, m, theta);
  };
  switch (algorithm) {
    case Algorithm::Gd:
      return gradient_flow(loss);
    case Algorithm::Nesterov:
      return nesterov_flow(loss);
    case Algorithm::Adam:
      return adam_stationary_flow(loss, problem.epsilon);
    case Algorithm::Newton:
      return newton_flow(loss);
    case Algorithm::NewtonCovariant:
      return newton_flow(loss, connection ? *connection : flat_connection(loss.dim));
    case Algorithm::Ngd:
      return preconditioned_flow(loss, fisher, Algorithm::Ngd);
    case Algorithm::Ggn:
      return preconditioned_flow(loss, ggn, Algorithm::Ggn);
    case Algorithm::Nngd:
      return accelerated_flow(loss, fisher, problem.r, connection, Algorithm::Nngd);
    case Algorithm::Agn:
      return accelerated_flow(loss, ggn, problem.r, connection, Algorithm::Agn);
  }
  throw ConfigError("unknown algorithm");
}

int FlowBuilder::order() const {
  switch (algorithm) {
    case Algorithm::Nesterov:
    case Algorithm::Nngd:
    case Algorithm::Agn:
      return 2;
    default:
      return 1;
  }
}

FlowFactory FlowBuilder::factory() const {
  return [self = *this](const std::optional<Diffeomorphism>& chart) {
    return self.build(chart);
  };
}

ResidualSample naturality_residual_detail(const FlowBuilder& builder,
                                          const Diffeomorphism& g,
                                          const OptimizerState& s) {
  const FlowField flow = builder.build();
  const FlowField flow_bar = builder.build(g);
  const StateVelocity v = flow(s);
  const StateVelocity pushed = pushforward_tangent(g, s, v);
  StateVelocity v_bar;
  try {
    v_bar = flow_bar(pushforward_state(g, s));
  } catch (const SingularityError& e) {
    throw SingularityError(e.what(), e.theta(), e.condition(), "barred");
  }
  ResidualSample out;
  out.residual = (pushed.flat() - v_bar.flat()).norm();
  out.condition = std::max(v.condition, v_bar.condition);
  out.truncated = v.truncated || v_bar.truncated;
  return out;
}

double naturality_residual(const FlowBuilder& builder, const Diffeomorphism& g,
                           const OptimizerState& s) {
  return naturality_residual_detail(builder, g, s).residual;
}

std::string to_string(Verdict verdict) {
  return verdict == Verdict::Equivariant ? "equivariant" : "violated";
}

OptimizerState sample_state(Rng& rng, int dim, int order) {
  OptimizerState s;
  s.derivs.push_back(rng.uniform_vector(dim, -kStateBox, kStateBox));
  if (order == 2) {
    s.derivs.push_back(rng.uniform_vector(dim, -kStateBox, kStateBox));
    s.time = rng.uniform(0.5, 2.0);
  }
  return s;
}

std::vector<ResidualReport> classify_equivariance(const FlowBuilder& builder,
                                                  const ClassifyOptions& options) {
  if (options.trials < 1) throw ConfigError("classify: trials must be >= 1");
  if (options.states_per_trial < 1)
    throw ConfigError("classify: states per trial must be >= 1");
  const int dim = builder.problem.dim();
  const FlowField flow = builder.build();

  std::vector<ResidualReport> reports;
  for (Family family : options.families) {
    ResidualReport rep;
    rep.algorithm = builder.algorithm;
    rep.family = family;
    rep.dim = dim;
    rep.trials = options.trials;
    rep.seed = options.seed;
    rep.tolerance = options.tolerance;
    rep.violation_threshold = options.violation_threshold;
    double sum = 0.0;
    for (int trial = 0; trial < options.trials; ++trial) {
      const Diffeomorphism g = sample_diffeomorphism(
          family, dim, trial_seed(options.seed, dim, family, trial, kTagDiffeo));
      const FlowField flow_bar = builder.build(g);
      Rng rng(trial_seed(options.seed, dim, family, trial, kTagStates));
      int accepted = 0;
      int attempts = 0;
      while (accepted < options.states_per_trial) {
        if (++attempts > kMaxRejections)
          throw ConfigError("classify: could not sample a well-conditioned state");
        const OptimizerState s = sample_state(rng, dim, builder.order());
        double residual = 0.0;
        try {
          const StateVelocity v = flow(s);
          const StateVelocity v_bar = flow_bar(pushforward_state(g, s));
          if (std::max(v.condition, v_bar.condition) > options.max_condition ||
              v.truncated || v_bar.truncated) {
            ++rep.rejected;
            continue;
          }
          residual = (pushforward_tangent(g, s, v).flat() - v_bar.flat()).norm();
        } catch (const SingularityError&) {
          ++rep.rejected;
          continue;
        }
        ++accepted;
        ++rep.states;
        sum += residual;
        rep.max_residual = std::max(rep.max_residual, residual);
      }
    }
    rep.mean_residual = sum / rep.states;
    rep.verdict = rep.max_residual <= options.tolerance ? Verdict::Equivariant
                                                        : Verdict::Violated;
    rep.ambiguous = rep.max_residual > options.tolerance &&
                    rep.max_residual < options.violation_threshold;
    reports.push_back(rep);
  }
  return reports;
}

bool expected_equivariant(Algorithm algorithm, Family family) {
  if (family == Family::Identity) return true;
  switch (algorithm) {
    case Algorithm::Gd:
    case Algorithm::Nesterov:
      return family == Family::Translation || family == Family::Euclidean ||
             family == Family::SignedPermutation;
    case Algorithm::Adam:
      return family == Family::Translation || family == Family::SignedPermutation;
    case Algorithm::Newton:
      return family != Family::Shear && family != Family::Composite;
    default:
      return true;
  }
}

std::string equivariance_group(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Gd:
    case Algorithm::Nesterov:
      return "E(N) = O(N) ⋉ T(N)";
    case Algorithm::Adam:
      return "B_N ⋉ T(N)";
    case Algorithm::Newton:
      return "Aff(N,R) = GL(N,R) ⋉ T(N)";
    default:
      return "Diff(M)";
  }
}

TableReport reproduce_table(const TableOptions& options) {
  TableReport table;
  for (int dim : options.dims) {
    Problem problem = standard_problem(dim);
    for (Algorithm algorithm : options.algorithms) {
      const FlowBuilder builder{algorithm, problem};
      for (const ResidualReport& rep : classify_equivariance(builder, options.classify)) {
        TableEntry entry;
        entry.report = rep;
        entry.expected_equivariant = expected_equivariant(algorithm, rep.family);
        entry.matches = !rep.ambiguous &&
                        (rep.verdict == Verdict::Equivariant) == entry.expected_equivariant;
        if (!entry.matches) {
          table.mismatches.push_back(
              "N=" + std::to_string(dim) + " " + to_string(algorithm) + " x " +
              to_string(rep.family) + ": got " + to_string(rep.verdict) +
              (rep.ambiguous ? " (ambiguous)" : "") + ", expected " +
              (entry.expected_equivariant ? "equivariant" : "violated") +
              ", max residual " + std::to_string(rep.max_residual));
        }
        table.entries.push_back(entry);
      }
    }
  }
  return table;
}

}  // namespace natflow
