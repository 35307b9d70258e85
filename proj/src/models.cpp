#include "natflow/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "natflow/errors.hpp"
#include "natflow/random.hpp"

namespace natflow {

int Dataset::input_dim() const {
  return inputs.empty() ? 0 : static_cast<int>(inputs.front().size());
}

int Dataset::target_dim() const {
  return targets.empty() ? 0 : static_cast<int>(targets.front().size());
}

void Dataset::validate() const {
  if (inputs.empty()) throw ConfigError("dataset is empty");
  if (inputs.size() != targets.size())
    throw ConfigError("dataset has mismatched input/target counts");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].size() != input_dim() || targets[k].size() != target_dim())
      throw ConfigError("dataset sample " + std::to_string(k) +
                        " has inconsistent dimensions");
  }
}

Dataset load_dataset(const std::filesystem::path& path, int input_dim,
                     int target_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  Dataset data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    ss.imbue(std::locale::classic());
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::istringstream cs(cell);
      cs.imbue(std::locale::classic());
      double v = 0.0;
      if (!(cs >> v))
        throw ConfigError("dataset line " + std::to_string(line_no) +
                          ": bad number '" + cell + "'");
      fields.push_back(v);
    }
    if (static_cast<int>(fields.size()) != input_dim + target_dim)
      throw ConfigError("dataset line " + std::to_string(line_no) + ": expected " +
                        std::to_string(input_dim + target_dim) + " fields");
    data.inputs.push_back(
        Eigen::Map<Eigen::VectorXd>(fields.data(), input_dim));
    data.targets.push_back(
        Eigen::Map<Eigen::VectorXd>(fields.data() + input_dim, target_dim));
  }
  data.validate();
  return data;
}

Dataset sine_dataset(int samples, int target_dim) {
  if (samples < 1) throw ConfigError("sine dataset needs at least one sample");
  Dataset data;
  for (int k = 0; k < samples; ++k) {
    const double x =
        samples == 1 ? 0.0 : -1.0 + 2.0 * k / static_cast<double>(samples - 1);
    Eigen::VectorXd y(target_dim);
    for (int p = 0; p < target_dim; ++p) y(p) = std::sin((p + 1) * x + 0.5 * p);
    data.inputs.push_back(Eigen::VectorXd::Constant(1, x));
    data.targets.push_back(y);
  }
  return data;
}

Dataset wave_dataset(int samples, int input_dim, int target_dim, double range,
                     std::uint64_t seed) {
  if (samples < 1) throw ConfigError("wave dataset needs at least one sample");
  if (input_dim < 1) throw ConfigError("wave dataset needs at least one input");
  Rng rng(seed);
  Dataset data;
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd x = rng.uniform_vector(input_dim, -range, range);
    Eigen::VectorXd y(target_dim);
    for (int p = 0; p < target_dim; ++p)
      y(p) = std::sin((p + 1) * x.sum() + 0.5 * p) + 0.3 * x(0);
    data.inputs.push_back(x);
    data.targets.push_back(y);
  }
  return data;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::QuadraticSurrogate:
      return "quadratic-surrogate";
    case ModelKind::MlpTanh:
      return "mlp-tanh";
    case ModelKind::Linear:
      return "linear";
    case ModelKind::Custom:
      return "custom";
  }
  return "custom";
}

Eigen::VectorXd Model::operator()(const Eigen::VectorXd& x,
                                  const ParamVector& theta) const {
  const JetVector t = constants(theta);
  return values(forward(x, t));
}

Model linear_model(int input_dim, int output_dim) {
  Model m;
  m.kind = ModelKind::Linear;
  m.param_dim = input_dim * output_dim;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  m.forward = [input_dim, output_dim](const Eigen::VectorXd& x,
                                      std::span<const Jet> theta) {
    JetVector y(output_dim);
    for (int p = 0; p < output_dim; ++p) {
      Jet acc;
      for (int d = 0; d < input_dim; ++d) acc += theta[p * input_dim + d] * x(d);
      y[p] = std::move(acc);
    }
    return y;
  };
  return m;
}

Model quadratic_surrogate(const Matrix& factor) {
  Model m;
  m.kind = ModelKind::QuadraticSurrogate;
  m.param_dim = static_cast<int>(factor.cols());
  m.input_dim = 0;
  m.output_dim = static_cast<int>(factor.rows());
  m.forward = [factor](const Eigen::VectorXd&, std::span<const Jet> theta) {
    JetVector y(factor.rows());
    for (Eigen::Index p = 0; p < factor.rows(); ++p) {
      Jet acc;
      for (Eigen::Index i = 0; i < factor.cols(); ++i)
        acc += theta[i] * factor(p, i);
      y[p] = std::move(acc);
    }
    return y;
  };
  return m;
}

int MlpShape::param_count() const {
  return hidden * inputs + (hidden_bias ? hidden : 0) + outputs * hidden +
         (output_bias ? outputs : 0);
}

Model mlp_tanh(const MlpShape& shape) {
  Model m;
  m.kind = ModelKind::MlpTanh;
  m.param_dim = shape.param_count();
  m.input_dim = shape.inputs;
  m.output_dim = shape.outputs;
  m.forward = [shape](const Eigen::VectorXd& x, std::span<const Jet> theta) {
    const int w_off = 0;
    const int b_off = w_off + shape.hidden * shape.inputs;
    const int v_off = b_off + (shape.hidden_bias ? shape.hidden : 0);
    const int c_off = v_off + shape.outputs * shape.hidden;

    JetVector act(shape.hidden);
    for (int h = 0; h < shape.hidden; ++h) {
      Jet pre = shape.hidden_bias ? theta[b_off + h] : Jet(0.0);
      for (int d = 0; d < shape.inputs; ++d)
        pre += theta[w_off + h * shape.inputs + d] * x(d);
      act[h] = tanh(pre);
    }
    JetVector y(shape.outputs);
    for (int p = 0; p < shape.outputs; ++p) {
      Jet out = shape.output_bias ? theta[c_off + p] : Jet(0.0);
      for (int h = 0; h < shape.hidden; ++h)
        out += theta[v_off + p * shape.hidden + h] * act[h];
      y[p] = std::move(out);
    }
    return y;
  };
  return m;
}

ScalarField dataset_loss(const Model& model, const Dataset& data) {
  data.validate();
  if (data.target_dim() != model.output_dim)
    throw ConfigError("dataset target dimension does not match model output");
  if (model.input_dim > 0 && data.input_dim() != model.input_dim)
    throw ConfigError("dataset input dimension does not match model input");
  const double scale = 1.0 / static_cast<double>(data.size());
  return {model.param_dim, [model, data, scale](std::span<const Jet> theta) {
            Jet total;
            for (std::size_t k = 0; k < data.size(); ++k) {
              const JetVector y = model.forward(data.inputs[k], theta);
              Jet sample;
              for (std::size_t p = 0; p < y.size(); ++p)
                sample += square(y[p] - data.targets[k](p));
              total += sample;
            }
            return 0.5 * scale * total;
          }};
}

std::vector<Matrix> network_jacobian(const Model& model, const Dataset& data,
                                     const ParamVector& theta) {
  data.validate();
  std::vector<Matrix> out;
  out.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Eigen::VectorXd x = data.inputs[k];
    const VectorMap at_sample{
        model.param_dim, model.output_dim,
        [&model, x](std::span<const Jet> t) { return model.forward(x, t); }};
    out.push_back(jacobian(at_sample, theta));
  }
  return out;
}

}  // namespace natflow
