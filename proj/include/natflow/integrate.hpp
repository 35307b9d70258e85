#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "natflow/flows.hpp"

namespace natflow {

enum class Scheme { Euler, Rk4 };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct Trajectory {
  Scheme scheme = Scheme::Euler;
  double h = 0.0;
  std::vector<OptimizerState> states;  // states[0] is the initial state

  const OptimizerState& final_state() const { return states.back(); }
};

/// Fixed-step explicit integration of s' = eta(s). Time advances by h per
/// step. Throws DivergenceError with the step index on a non-finite state.
Trajectory integrate(const FlowField& flow, const OptimizerState& s0, double h,
                     int steps, Scheme scheme);

/// Header `xi,theta_1..theta_N[,u_1..u_N]`, one row per state, C locale,
/// shortest round-trip formatting.
std::string trajectory_csv(const Trajectory& trajectory);

/// Builds the flow intrinsically in a chart: nullopt is the reference chart,
/// otherwise the chart theta_bar = g(theta).
using FlowFactory = std::function<FlowField(const std::optional<Diffeomorphism>&)>;

struct DriftPoint {
  double h = 0.0;
  int steps = 0;
  double defect = 0.0;
  bool diverged = false;
  std::string error;
};

struct DriftResult {
  Scheme scheme = Scheme::Euler;
  std::vector<DriftPoint> points;
  double slope = 0.0;  // log-log least squares over the converged points
};

/// Integrates to `final_time` in both charts for every h (steps =
/// round(final_time / h)) and measures |g_*(trajectory) - trajectory_bar| at
/// the final time, in the barred chart. Failures are reported per h.
DriftResult equivariance_drift(const FlowFactory& factory, const Diffeomorphism& g,
                               const OptimizerState& s0,
                               const std::vector<double>& h_list, double final_time,
                               Scheme scheme);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace natflow
