#include "natflow/integrate.hpp"

#include <charconv>
#include <cmath>
#include <exception>

#include "natflow/errors.hpp"

namespace natflow {

namespace {

OptimizerState unflatten(const Eigen::VectorXd& y, int order, int dim, double time) {
  OptimizerState s;
  s.time = time;
  for (int k = 0; k < order; ++k) s.derivs.push_back(y.segment(k * dim, dim));
  return s;
}

Eigen::VectorXd rate(const FlowField& flow, const Eigen::VectorXd& y, int order,
                     int dim, double time) {
  return flow(unflatten(y, order, dim, time)).flat();
}

void format_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string to_string(Scheme scheme) {
  return scheme == Scheme::Euler ? "euler" : "rk4";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "rk4") return Scheme::Rk4;
  throw ConfigError("unknown scheme '" + name + "'");
}

Trajectory integrate(const FlowField& flow, const OptimizerState& s0, double h,
                     int steps, Scheme scheme) {
  if (s0.order() != flow.order)
    throw ConfigError("integrate: state order does not match the flow");
  if (!(h > 0.0)) throw ConfigError("integrate: step must be positive");
  if (steps < 1) throw ConfigError("integrate: need at least one step");

  const int order = s0.order();
  const int dim = s0.dim();
  Trajectory traj{scheme, h, {s0}};
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd y = s0.flat();
  double t = s0.time;
  for (int step = 1; step <= steps; ++step) {
    if (scheme == Scheme::Euler) {
      y += h * rate(flow, y, order, dim, t);
    } else {
      const Eigen::VectorXd k1 = rate(flow, y, order, dim, t);
      const Eigen::VectorXd k2 = rate(flow, y + 0.5 * h * k1, order, dim, t + 0.5 * h);
      const Eigen::VectorXd k3 = rate(flow, y + 0.5 * h * k2, order, dim, t + 0.5 * h);
      const Eigen::VectorXd k4 = rate(flow, y + h * k3, order, dim, t + h);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    // t0 + step * h rather than accumulating, so xi stays exact on the grid
    t = s0.time + step * h;
    if (!y.allFinite())
      throw DivergenceError("integration diverged at step " + std::to_string(step),
                            step);
    traj.states.push_back(unflatten(y, order, dim, t));
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = "xi";
  if (trajectory.states.empty()) return out + "\n";
  const int dim = trajectory.states[0].dim();
  const int order = trajectory.states[0].order();
  for (int i = 1; i <= dim; ++i) out += ",theta_" + std::to_string(i);
  if (order == 2)
    for (int i = 1; i <= dim; ++i) out += ",u_" + std::to_string(i);
  out += '\n';
  for (const OptimizerState& s : trajectory.states) {
    format_number(out, s.time);
    for (const ParamVector& d : s.derivs)
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        out += ',';
        format_number(out, d(i));
      }
    out += '\n';
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

DriftResult equivariance_drift(const FlowFactory& factory, const Diffeomorphism& g,
                               const OptimizerState& s0,
                               const std::vector<double>& h_list, double final_time,
                               Scheme scheme) {
  const FlowField flow = factory(std::nullopt);
  const FlowField flow_bar = factory(g);
  const OptimizerState s0_bar = pushforward_state(g, s0);

  DriftResult result;
  result.scheme = scheme;
  std::vector<double> hs, defects;
  for (double h : h_list) {
    DriftPoint point;
    point.h = h;
    point.steps = std::max(1, static_cast<int>(std::lround(final_time / h)));
    try {
      const Trajectory a = integrate(flow, s0, h, point.steps, scheme);
      const Trajectory b = integrate(flow_bar, s0_bar, h, point.steps, scheme);
      const OptimizerState pushed = pushforward_state(g, a.final_state());
      point.defect = (pushed.flat() - b.final_state().flat()).norm();
      if (!std::isfinite(point.defect))
        throw DivergenceError("non-finite defect", point.steps);
    } catch (const std::exception& e) {
      point.diverged = true;
      point.error = e.what();
    }
    if (!point.diverged && point.defect > 0.0) {
      hs.push_back(h);
      defects.push_back(point.defect);
    }
    result.points.push_back(point);
  }
  result.slope = loglog_slope(hs, defects);
  return result;
}

}  // namespace natflow
