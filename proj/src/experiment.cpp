#include "natflow/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "natflow/errors.hpp"
#include "natflow/linalg.hpp"
#include "natflow/random.hpp"

namespace natflow {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kTagInitial = 0x696e6974;

const std::set<std::string> kKnownKeys = {
    "experiment", "seed", "algorithms", "algorithm", "dims", "model", "dataset",
    "families", "trials", "states_per_trial", "tolerance", "violation_threshold",
    "max_condition", "h_list", "final_time", "scheme", "schemes", "h", "steps", "r",
    "epsilon", "noise_variance", "output_metric", "diffeomorphism",
    "initial_state", "output"};

// Collects diagnostics while reading fields so that validate() and
// parse_config() share one code path.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  std::vector<Diagnostic> diagnostics;

  void fatal(const std::string& msg) {
    diagnostics.push_back({Diagnostic::Severity::Fatal, msg});
  }
  void warn(const std::string& msg) {
    diagnostics.push_back({Diagnostic::Severity::Warning, msg});
  }
  bool has(const char* key) const { return doc_.contains(key); }
  const json& at(const char* key) const { return doc_.at(key); }

  template <class T>
  void read(const char* key, T& out) {
    if (!doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      fatal(std::string("'") + key + "' has the wrong type");
    }
  }

 private:
  const json& doc_;
};

int model_param_dim(Reader& rd, const json& model) {
  if (!model.is_object()) {
    rd.fatal("'model' must be an object");
    return 0;
  }
  const std::string kind = model.value("kind", std::string("standard"));
  try {
    if (kind == "standard") return model.value("dim", 4);
    if (kind == "mlp-tanh") {
      MlpShape s{model.value("inputs", 1), model.value("hidden", 1),
                 model.value("outputs", 1), model.value("hidden_bias", false),
                 model.value("output_bias", false)};
      if (s.inputs < 1 || s.hidden < 1 || s.outputs < 1) {
        rd.fatal("mlp-tanh layer sizes must be positive");
        return 0;
      }
      return s.param_count();
    }
    if (kind == "linear") {
      const int in = model.value("inputs", 1);
      const int out = model.value("outputs", 1);
      if (in < 1 || out < 1) {
        rd.fatal("linear model sizes must be positive");
        return 0;
      }
      return in * out;
    }
    if (kind == "quadratic-surrogate") {
      const auto rows = model.at("factor").get<std::vector<std::vector<double>>>();
      if (rows.empty() || rows[0].empty()) {
        rd.fatal("quadratic-surrogate factor must be a non-empty matrix");
        return 0;
      }
      return static_cast<int>(rows[0].size());
    }
  } catch (const json::exception&) {
    rd.fatal("model '" + kind + "' has malformed fields");
    return 0;
  }
  rd.fatal("unknown model kind '" + kind + "'");
  return 0;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ConfigError("matrix rows have different lengths");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void check_dim_cap(Reader& rd, int dim) {
  if (dim > kMaxDim)
    rd.fatal("dimension cap exceeded: " + std::to_string(dim) + " > " +
             std::to_string(kMaxDim));
  else if (dim < 1)
    rd.fatal("parameter dimension must be positive");
}

// Parses into `cfg` and records every problem in the reader.
void read_config(Reader& rd, const json& doc, ExperimentConfig& cfg) {
  if (!doc.is_object()) {
    rd.fatal("config must be a JSON object");
    return;
  }
  for (const auto& item : doc.items())
    if (!kKnownKeys.contains(item.key())) rd.warn("unknown key '" + item.key() + "'");

  if (rd.has("experiment")) {
    std::string name;
    rd.read("experiment", name);
    try {
      cfg.experiment = parse_experiment(name);
    } catch (const ConfigError& e) {
      rd.fatal(e.what());
    }
  }

  if (!rd.has("seed")) {
    rd.fatal("'seed' is mandatory");
  } else if (!rd.at("seed").is_number_integer() || rd.at("seed").get<long long>() < 0) {
    rd.fatal("'seed' must be a nonnegative integer");
  } else {
    cfg.seed = rd.at("seed").get<std::uint64_t>();
  }

  std::vector<std::string> names;
  if (rd.has("algorithm")) {
    std::string one;
    rd.read("algorithm", one);
    names = {one};
  }
  rd.read("algorithms", names);
  if (!names.empty()) {
    cfg.algorithms.clear();
    for (const auto& n : names) {
      try {
        cfg.algorithms.push_back(parse_algorithm(n));
      } catch (const ConfigError& e) {
        rd.fatal(e.what());
      }
    }
  }

  rd.read("dims", cfg.dims);
  if (cfg.experiment == ExperimentKind::Table) {
    for (int d : cfg.dims) {
      check_dim_cap(rd, d);
      if (d >= 1 && d <= kMaxDim) {
        try {
          standard_problem(d);
        } catch (const ConfigError& e) {
          rd.fatal(e.what());
        }
      }
    }
  }

  if (rd.has("model")) cfg.model = rd.at("model");
  const int dim = model_param_dim(rd, cfg.model);
  check_dim_cap(rd, dim);
  if (cfg.model.value("kind", std::string("standard")) == "standard" && dim >= 1 &&
      dim <= kMaxDim) {
    try {
      standard_problem(dim);
    } catch (const ConfigError& e) {
      rd.fatal(e.what());
    }
  }

  if (rd.has("dataset")) {
    cfg.dataset = rd.at("dataset");
    if (cfg.dataset.is_object() && cfg.dataset.contains("path")) {
      const std::string path = cfg.dataset.value("path", "");
      if (!std::filesystem::exists(path)) rd.fatal("dataset file not found: " + path);
    } else if (cfg.dataset.is_object() && cfg.dataset.contains("builtin")) {
      const std::string b = cfg.dataset.value("builtin", "");
      if (b != "wave" && b != "sine") rd.fatal("unknown builtin dataset '" + b + "'");
    } else if (!cfg.dataset.is_null()) {
      rd.fatal("'dataset' must be {\"path\": ...} or {\"builtin\": ...}");
    }
  }

  std::vector<std::string> fams;
  rd.read("families", fams);
  if (rd.has("families")) {
    cfg.families.clear();
    for (const auto& f : fams) {
      try {
        const Family fam = parse_family(f);
        if (fam == Family::Identity) throw ConfigError("family 'identity' cannot be classified");
        cfg.families.push_back(fam);
      } catch (const ConfigError& e) {
        rd.fatal(e.what());
      }
    }
  }

  rd.read("trials", cfg.trials);
  rd.read("states_per_trial", cfg.states_per_trial);
  rd.read("tolerance", cfg.tolerance);
  rd.read("violation_threshold", cfg.violation_threshold);
  rd.read("max_condition", cfg.max_condition);
  if (cfg.trials < 1) rd.fatal("'trials' must be >= 1");
  if (cfg.states_per_trial < 1) rd.fatal("'states_per_trial' must be >= 1");
  if (!(cfg.tolerance > 0.0)) rd.fatal("'tolerance' must be positive");
  if (!(cfg.tolerance < cfg.violation_threshold))
    rd.fatal("ordering error: tolerance must be below violation_threshold");
  if (!(cfg.max_condition >= 1.0)) rd.fatal("'max_condition' must be >= 1");
  if (cfg.max_condition > 1e8)
    rd.warn("max_condition above 1e8: solve roundoff can exceed the tolerance");

  rd.read("h_list", cfg.h_list);
  for (double h : cfg.h_list)
    if (!(h > 0.0)) rd.fatal("'h_list' entries must be positive");
  rd.read("final_time", cfg.final_time);
  if (!(cfg.final_time > 0.0)) rd.fatal("'final_time' must be positive");
  std::vector<std::string> scheme_names;
  if (rd.has("scheme")) {
    std::string one;
    rd.read("scheme", one);
    scheme_names = {one};
  }
  rd.read("schemes", scheme_names);
  if (!scheme_names.empty()) {
    cfg.schemes.clear();
    for (const auto& s : scheme_names) {
      try {
        cfg.schemes.push_back(parse_scheme(s));
      } catch (const ConfigError& e) {
        rd.fatal(e.what());
      }
    }
  }
  rd.read("h", cfg.h);
  rd.read("steps", cfg.steps);
  if (!(cfg.h > 0.0)) rd.fatal("'h' must be positive");
  if (cfg.steps < 1) rd.fatal("'steps' must be >= 1");

  rd.read("r", cfg.r);
  rd.read("epsilon", cfg.epsilon);
  rd.read("noise_variance", cfg.noise_variance);
  if (!(cfg.r > 0.0)) rd.fatal("'r' must be positive");
  if (!(cfg.epsilon >= 0.0)) rd.fatal("'epsilon' must be nonnegative");
  if (!(cfg.noise_variance > 0.0)) rd.fatal("'noise_variance' must be positive");
  if (rd.has("output_metric")) {
    try {
      const Matrix m = to_matrix(rd.at("output_metric").get<std::vector<std::vector<double>>>());
      if (m.rows() != m.cols() || m.rows() == 0)
        rd.fatal("'output_metric' must be a square matrix");
      else if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0.0 || min_eigenvalue(m) < 0.0)
        rd.fatal("'output_metric' must be symmetric positive semidefinite");
      else
        cfg.output_metric = m;
    } catch (const std::exception&) {
      rd.fatal("'output_metric' must be a matrix of numbers");
    }
  }

  if (rd.has("diffeomorphism")) {
    const json& d = rd.at("diffeomorphism");
    try {
      cfg.diffeomorphism_family = parse_family(d.value("family", std::string("shear")));
      cfg.diffeomorphism_seed = d.value("seed", std::uint64_t{0});
    } catch (const std::exception& e) {
      rd.fatal(std::string("'diffeomorphism': ") + e.what());
    }
  }

  if (rd.has("initial_state")) {
    const json& s = rd.at("initial_state");
    try {
      InitialState init;
      init.theta = s.at("theta").get<std::vector<double>>();
      init.velocity = s.value("velocity", std::vector<double>{});
      if (s.contains("time")) init.time = s.at("time").get<double>();
      if (static_cast<int>(init.theta.size()) != dim)
        rd.fatal("'initial_state.theta' has the wrong dimension");
      if (!init.velocity.empty() && static_cast<int>(init.velocity.size()) != dim)
        rd.fatal("'initial_state.velocity' has the wrong dimension");
      if (init.time && *init.time < 0.0) rd.fatal("'initial_state.time' must be >= 0");
      cfg.initial_state = init;
    } catch (const json::exception&) {
      rd.fatal("'initial_state' must hold a numeric 'theta' array");
    }
  }

  rd.read("output", cfg.output);

  if ((cfg.experiment == ExperimentKind::Drift ||
       cfg.experiment == ExperimentKind::Trajectory) &&
      cfg.algorithms.size() != 1 && (rd.has("algorithm") || rd.has("algorithms")))
    rd.warn("only the first algorithm is used by this experiment");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

OptimizerState initial_state(const ExperimentConfig& cfg, const FlowBuilder& builder) {
  const int dim = builder.problem.dim();
  const int order = builder.order();
  if (cfg.initial_state) {
    OptimizerState s;
    s.derivs.push_back(Eigen::Map<const Eigen::VectorXd>(
        cfg.initial_state->theta.data(), dim));
    if (order == 2) {
      s.derivs.push_back(cfg.initial_state->velocity.empty()
                             ? Eigen::VectorXd::Zero(dim)
                             : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                   cfg.initial_state->velocity.data(), dim)));
    }
    s.time = cfg.initial_state->time.value_or(order == 2 ? kXiMin : 0.0);
    return s;
  }
  // seeded start at rest, resampled until the flow is well conditioned there
  Rng rng(mix_seed(cfg.seed, kTagInitial));
  const FlowField flow = builder.build();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    OptimizerState s;
    s.derivs.push_back(rng.uniform_vector(dim, -1.0, 1.0));
    if (order == 2) {
      s.derivs.push_back(Eigen::VectorXd::Zero(dim));
      s.time = kXiMin;
    }
    try {
      const StateVelocity v = flow(s);
      if (v.condition <= cfg.max_condition && !v.truncated) return s;
    } catch (const SingularityError&) {
    }
  }
  throw ConfigError("could not find a well-conditioned initial state");
}

ordered_json state_json(const OptimizerState& s) {
  ordered_json out;
  out["xi"] = s.time;
  out["theta"] = std::vector<double>(s.theta().data(), s.theta().data() + s.dim());
  if (s.order() == 2)
    out["velocity"] =
        std::vector<double>(s.derivs[1].data(), s.derivs[1].data() + s.dim());
  return out;
}

RunResult run_classify(const ExperimentConfig& cfg) {
  const Problem problem = build_problem(cfg);
  ClassifyOptions options{cfg.families,    cfg.trials,        cfg.states_per_trial,
                          cfg.tolerance,   cfg.violation_threshold,
                          cfg.max_condition, cfg.seed};
  std::vector<ResidualReport> reports;
  for (Algorithm a : cfg.algorithms) {
    const auto part = classify_equivariance(FlowBuilder{a, problem}, options);
    reports.insert(reports.end(), part.begin(), part.end());
  }
  ordered_json doc;
  doc["experiment"] = "classify";
  doc["seed"] = cfg.seed;
  doc["dimension"] = problem.dim();
  doc["reports"] = ordered_json::array();
  bool ambiguous = false;
  for (const auto& rep : reports) {
    doc["reports"].push_back(report_json(rep));
    ambiguous = ambiguous || rep.ambiguous;
  }
  RunResult out;
  out.files["report.json"] = doc.dump(2) + "\n";
  out.files["report.txt"] = report_text(reports);
  out.summary = out.files["report.txt"];
  out.exit_code = ambiguous ? 1 : 0;
  return out;
}

RunResult run_table(const ExperimentConfig& cfg) {
  TableOptions options;
  options.dims = cfg.dims;
  options.algorithms = cfg.algorithms;
  options.classify = {cfg.families,    cfg.trials,        cfg.states_per_trial,
                      cfg.tolerance,   cfg.violation_threshold,
                      cfg.max_condition, cfg.seed};
  const TableReport table = reproduce_table(options);

  ordered_json doc;
  doc["experiment"] = "table";
  doc["seed"] = cfg.seed;
  doc["dims"] = cfg.dims;
  ordered_json groups = ordered_json::object();
  for (Algorithm a : cfg.algorithms) groups[to_string(a)] = equivariance_group(a);
  doc["equivariance_groups"] = groups;
  doc["reports"] = ordered_json::array();
  std::vector<ResidualReport> reports;
  for (const TableEntry& e : table.entries) {
    ordered_json r = report_json(e.report);
    r["expected"] = e.expected_equivariant ? "equivariant" : "violated";
    r["matches"] = e.matches;
    doc["reports"].push_back(r);
    reports.push_back(e.report);
  }
  doc["mismatches"] = table.mismatches;
  doc["ok"] = table.ok();

  // verdict matrix: one row per (dimension, algorithm), one column per family
  std::string matrix = "dimension,algorithm,group";
  for (Family f : cfg.families) matrix += "," + to_string(f);
  matrix += '\n';
  std::size_t k = 0;
  for (int dim : cfg.dims) {
    for (Algorithm a : cfg.algorithms) {
      matrix += std::to_string(dim) + "," + to_string(a) + ",\"" +
                equivariance_group(a) + "\"";
      for (std::size_t f = 0; f < cfg.families.size(); ++f, ++k) {
        const TableEntry& e = table.entries[k];
        matrix += "," + to_string(e.report.verdict);
        if (!e.matches) matrix += "(MISMATCH)";
      }
      matrix += '\n';
    }
  }

  std::string text = report_text(reports);
  text += "\nequivariance groups:\n";
  for (Algorithm a : cfg.algorithms)
    text += "  " + pad(to_string(a), 18) + equivariance_group(a) + "\n";
  if (table.ok()) {
    text += "\nall " + std::to_string(table.entries.size()) +
            " verdicts match the expected table\n";
  } else {
    text += "\nMISMATCHES:\n";
    for (const auto& m : table.mismatches) text += "  " + m + "\n";
  }

  RunResult out;
  out.files["report.json"] = doc.dump(2) + "\n";
  out.files["report.txt"] = text;
  out.files["verdict_matrix.csv"] = matrix;
  out.summary = text;
  out.exit_code = table.ok() ? 0 : 1;
  return out;
}

RunResult run_drift(const ExperimentConfig& cfg) {
  const Problem problem = build_problem(cfg);
  const FlowBuilder builder{cfg.algorithms.front(), problem};
  const Diffeomorphism g = sample_diffeomorphism(
      cfg.diffeomorphism_family, problem.dim(), cfg.diffeomorphism_seed);
  const OptimizerState s0 = initial_state(cfg, builder);

  std::vector<DriftResult> results;
  for (Scheme scheme : cfg.schemes)
    results.push_back(
        equivariance_drift(builder.factory(), g, s0, cfg.h_list, cfg.final_time, scheme));

  ordered_json doc;
  doc["experiment"] = "drift";
  doc["seed"] = cfg.seed;
  doc["algorithm"] = to_string(builder.algorithm);
  doc["dimension"] = problem.dim();
  doc["diffeomorphism"] = {{"family", to_string(g.family)},
                           {"seed", cfg.diffeomorphism_seed}};
  doc["final_time"] = cfg.final_time;
  doc["initial_state"] = state_json(s0);
  doc["schemes"] = ordered_json::array();
  std::string text = "drift of " + to_string(builder.algorithm) + " under " +
                     to_string(g.family) + " (N=" + std::to_string(problem.dim()) +
                     ", final time " + fmt("%g", cfg.final_time) + ")\n";
  for (const DriftResult& r : results) {
    ordered_json sch;
    sch["scheme"] = to_string(r.scheme);
    sch["slope"] = r.slope;
    sch["points"] = ordered_json::array();
    text += "\n" + to_string(r.scheme) + "  slope " + fmt("%.4f", r.slope) + "\n";
    text += "  " + pad("h", 12) + pad("steps", 8) + "defect\n";
    for (const DriftPoint& p : r.points) {
      ordered_json pt;
      pt["h"] = p.h;
      pt["steps"] = p.steps;
      pt["defect"] = p.diverged ? ordered_json(nullptr) : ordered_json(p.defect);
      pt["diverged"] = p.diverged;
      if (p.diverged) pt["error"] = p.error;
      sch["points"].push_back(pt);
      text += "  " + pad(fmt("%g", p.h), 12) + pad(std::to_string(p.steps), 8) +
              (p.diverged ? "diverged: " + p.error : fmt("%.6e", p.defect)) + "\n";
    }
    doc["schemes"].push_back(sch);
  }

  RunResult out;
  out.files["report.json"] = doc.dump(2) + "\n";
  out.files["report.txt"] = text;
  out.files["drift.csv"] = drift_csv(results);
  out.summary = text;
  return out;
}

RunResult run_trajectory(const ExperimentConfig& cfg) {
  const Problem problem = build_problem(cfg);
  const FlowBuilder builder{cfg.algorithms.front(), problem};
  const OptimizerState s0 = initial_state(cfg, builder);
  const Scheme scheme = cfg.schemes.front();
  const ScalarField loss = dataset_loss(problem.model, problem.data);

  RunResult out;
  ordered_json doc;
  doc["experiment"] = "trajectory";
  doc["seed"] = cfg.seed;
  doc["algorithm"] = to_string(builder.algorithm);
  doc["dimension"] = problem.dim();
  doc["scheme"] = to_string(scheme);
  doc["h"] = cfg.h;
  doc["steps"] = cfg.steps;
  doc["initial_state"] = state_json(s0);
  doc["initial_loss"] = loss(s0.theta());
  try {
    const Trajectory traj = integrate(builder.build(), s0, cfg.h, cfg.steps, scheme);
    doc["diverged"] = false;
    doc["final_state"] = state_json(traj.final_state());
    doc["final_loss"] = loss(traj.final_state().theta());
    out.files["trajectory.csv"] = trajectory_csv(traj);
  } catch (const std::exception& e) {
    doc["diverged"] = true;
    doc["error"] = e.what();
    out.exit_code = 1;
  }
  out.files["report.json"] = doc.dump(2) + "\n";
  out.summary = to_string(builder.algorithm) + " trajectory: loss " +
                fmt("%.6e", doc["initial_loss"].get<double>()) + " -> " +
                (doc.contains("final_loss") ? fmt("%.6e", doc["final_loss"].get<double>())
                                            : std::string("diverged")) +
                "\n";
  out.files["report.txt"] = out.summary;
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Classify:
      return "classify";
    case ExperimentKind::Table:
      return "table";
    case ExperimentKind::Drift:
      return "drift";
    case ExperimentKind::Trajectory:
      return "trajectory";
  }
  return "table";
}

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "classify") return ExperimentKind::Classify;
  if (name == "table") return ExperimentKind::Table;
  if (name == "drift") return ExperimentKind::Drift;
  if (name == "trajectory") return ExperimentKind::Trajectory;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::vector<Diagnostic> validate(const json& config) {
  Reader rd(config);
  ExperimentConfig cfg;
  read_config(rd, config, cfg);
  return rd.diagnostics;
}

ExperimentConfig parse_config(const json& config) {
  Reader rd(config);
  ExperimentConfig cfg;
  read_config(rd, config, cfg);
  std::string errors;
  for (const Diagnostic& d : rd.diagnostics)
    if (d.severity == Diagnostic::Severity::Fatal) errors += "\n  " + d.message;
  if (!errors.empty()) throw ConfigError("invalid config:" + errors);
  return cfg;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

Problem build_problem(const ExperimentConfig& cfg) {
  const json& m = cfg.model;
  const std::string kind = m.value("kind", std::string("standard"));
  Problem p;
  if (kind == "standard") {
    p = standard_problem(m.value("dim", 4));
  } else if (kind == "mlp-tanh") {
    const MlpShape s{m.value("inputs", 1), m.value("hidden", 1), m.value("outputs", 1),
                     m.value("hidden_bias", false), m.value("output_bias", false)};
    p.model = mlp_tanh(s);
    p.data = wave_dataset(16, s.inputs, s.outputs, 2.0);
  } else if (kind == "linear") {
    p.model = linear_model(m.value("inputs", 1), m.value("outputs", 1));
    p.data = wave_dataset(16, p.model.input_dim, p.model.output_dim, 2.0);
  } else if (kind == "quadratic-surrogate") {
    p.model = quadratic_surrogate(
        to_matrix(m.at("factor").get<std::vector<std::vector<double>>>()));
    p.data.inputs = {Eigen::VectorXd(0)};
    p.data.targets = {Eigen::VectorXd::Ones(p.model.output_dim)};
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }

  if (cfg.dataset.is_object() && cfg.dataset.contains("path")) {
    p.data = load_dataset(cfg.dataset.value("path", ""), p.model.input_dim,
                          p.model.output_dim);
  } else if (cfg.dataset.is_object() && cfg.dataset.contains("builtin")) {
    const std::string b = cfg.dataset.value("builtin", "");
    const int samples = cfg.dataset.value("samples", 16);
    if (b == "sine") {
      if (p.model.input_dim != 1) throw ConfigError("sine dataset is one-dimensional");
      p.data = sine_dataset(samples, p.model.output_dim);
    } else if (b == "wave") {
      p.data = wave_dataset(samples, p.model.input_dim, p.model.output_dim,
                            cfg.dataset.value("range", 2.0),
                            cfg.dataset.value("seed", std::uint64_t{7}));
    } else {
      throw ConfigError("unknown builtin dataset '" + b + "'");
    }
  }

  if (p.output_metric.size() == 0 || cfg.output_metric) {
    if (cfg.output_metric) {
      p.output_metric = *cfg.output_metric;
    } else {
      const int out = p.model.output_dim;
      p.output_metric = Matrix::Identity(out, out) +
                        0.25 * (Matrix::Ones(out, out) - Matrix::Identity(out, out));
    }
  }
  if (p.output_metric.rows() != p.model.output_dim)
    throw ConfigError("output_metric does not match the model output dimension");
  p.noise_variance = cfg.noise_variance;
  p.epsilon = cfg.epsilon;
  p.r = cfg.r;
  p.data.validate();
  return p;
}

RunResult run(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::Classify:
      return run_classify(config);
    case ExperimentKind::Table:
      return run_table(config);
    case ExperimentKind::Drift:
      return run_drift(config);
    case ExperimentKind::Trajectory:
      return run_trajectory(config);
  }
  throw ConfigError("unknown experiment");
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : result.files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << contents;
  }
}

ordered_json report_json(const ResidualReport& report) {
  ordered_json j;
  j["algorithm"] = to_string(report.algorithm);
  j["family"] = to_string(report.family);
  j["dimension"] = report.dim;
  j["trials"] = report.trials;
  j["states"] = report.states;
  j["rejected"] = report.rejected;
  j["max_residual"] = report.max_residual;
  j["mean_residual"] = report.mean_residual;
  j["verdict"] = to_string(report.verdict);
  j["ambiguous"] = report.ambiguous;
  j["seed"] = report.seed;
  j["tolerance"] = report.tolerance;
  j["violation_threshold"] = report.violation_threshold;
  return j;
}

std::string report_text(const std::vector<ResidualReport>& reports) {
  std::string out = pad("N", 4) + pad("algorithm", 18) + pad("family", 20) +
                    pad("trials", 8) + pad("max_residual", 15) +
                    pad("mean_residual", 15) + "verdict\n";
  for (const ResidualReport& r : reports) {
    out += pad(std::to_string(r.dim), 4) + pad(to_string(r.algorithm), 18) +
           pad(to_string(r.family), 20) + pad(std::to_string(r.trials), 8) +
           pad(fmt("%.3e", r.max_residual), 15) + pad(fmt("%.3e", r.mean_residual), 15) +
           to_string(r.verdict) + (r.ambiguous ? " (AMBIGUOUS)" : "") + "\n";
  }
  return out;
}

std::string drift_csv(const std::vector<DriftResult>& results) {
  std::string out = "scheme,h,steps,defect\n";
  for (const DriftResult& r : results) {
    for (const DriftPoint& p : r.points) {
      out += to_string(r.scheme) + "," + fmt("%.17g", p.h) + "," +
             std::to_string(p.steps) + "," + (p.diverged ? "nan" : fmt("%.17g", p.defect)) +
             "\n";
    }
  }
  return out;
}

}  // namespace natflow
