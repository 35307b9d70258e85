#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "natflow/diffcalc.hpp"

namespace natflow {

struct Dataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;

  std::size_t size() const { return inputs.size(); }
  int input_dim() const;
  int target_dim() const;
  /// Throws ConfigError unless non-empty and dimension-consistent.
  void validate() const;
};

/// One sample per line: `input_dim` inputs then `target_dim` targets,
/// comma-separated. Blank lines and lines starting with '#' are skipped.
Dataset load_dataset(const std::filesystem::path& path, int input_dim,
                     int target_dim);

/// Deterministic 1-D regression set: x on a uniform grid in [-1, 1],
/// y_p = sin((p + 1) x + 0.5 p) for each output p.
Dataset sine_dataset(int samples, int target_dim);

/// Scattered multi-input regression set: x uniform in [-range, range]^d drawn
/// from natflow::Rng(seed), y_p = sin((p + 1) sum(x) + 0.5 p) + 0.3 x_0.
Dataset wave_dataset(int samples, int input_dim, int target_dim, double range,
                     std::uint64_t seed = 7);

enum class ModelKind { QuadraticSurrogate, MlpTanh, Linear, Custom };

std::string to_string(ModelKind kind);

/// y = f(x, theta): inputs are data (never differentiated), theta is seeded.
struct Model {
  using Forward =
      std::function<JetVector(const Eigen::VectorXd& x, std::span<const Jet> theta)>;

  ModelKind kind = ModelKind::Custom;
  int param_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  Forward forward;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x,
                             const ParamVector& theta) const;
};

/// f(x, theta) = W x with W (output_dim x input_dim) stored row-major in theta.
Model linear_model(int input_dim, int output_dim);

/// f(x, theta) = R theta, independent of x. The mean-squared loss of this model
/// is a convex quadratic with Hessian R^T R.
Model quadratic_surrogate(const Matrix& factor);

struct MlpShape {
  int inputs = 1;
  int hidden = 1;
  int outputs = 1;
  bool hidden_bias = false;
  bool output_bias = false;

  int param_count() const;
};

/// One tanh hidden layer. Parameter layout: hidden weights (row-major), hidden
/// biases, output weights (row-major), output biases.
Model mlp_tanh(const MlpShape& shape);

/// theta -> (1/|S|) sum 1/2 |f(x, theta) - y|^2, summed in dataset order.
ScalarField dataset_loss(const Model& model, const Dataset& data);

/// One P x N Jacobian per sample, in dataset order.
std::vector<Matrix> network_jacobian(const Model& model, const Dataset& data,
                                     const ParamVector& theta);

}  // namespace natflow
