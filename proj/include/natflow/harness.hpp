#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "natflow/flows.hpp"
#include "natflow/integrate.hpp"

namespace natflow {

/// Classification thresholds. A residual at or below kEquivarianceTol is an
/// equivariant verdict; a family is only called violated when its worst
/// residual reaches kViolationThreshold. Anything in between is ambiguous.
inline constexpr double kEquivarianceTol = 1e-7;
inline constexpr double kViolationThreshold = 1e-3;
/// States whose flows need a matrix worse conditioned than this are resampled.
/// Solves are accurate to roughly cond * 1e-16 * |velocity|, and this cap
/// keeps that comfortably below kEquivarianceTol on the standard problems.
inline constexpr double kMaxSampleCondition = 1e6;
/// Box for sampled parameters and velocities.
inline constexpr double kStateBox = 1.5;

/// Model, data and hyperparameters that every algorithm is built from.
struct Problem {
  Model model;
  Dataset data;
  double noise_variance = 1.0;
  Matrix output_metric;  // M of the generalized Gauss-Newton matrix
  double epsilon = 1e-8;
  double r = 3.0;

  int dim() const { return model.param_dim; }
};

/// Single-hidden-layer tanh networks on a 16-sample wave dataset. Supported
/// parameter counts: 2, 3, 4, 6, 8, 16.
Problem standard_problem(int dim);

/// Recipe that builds one algorithm's flow in any chart. In a barred chart the
/// loss is pulled back, preconditioners are recomputed from the pulled-back
/// model and the covariant variants use the pulled-back connection, so the
/// barred flow is computed intrinsically rather than transported.
struct FlowBuilder {
  Algorithm algorithm = Algorithm::Gd;
  Problem problem;

  FlowField build(const std::optional<Diffeomorphism>& chart = std::nullopt) const;
  int order() const;
  FlowFactory factory() const;
};

struct ResidualSample {
  double residual = 0.0;
  double condition = 1.0;  // worst over both charts
  bool truncated = false;
};

/// | g_*(eta(s)) - eta_bar(g_*(s)) | with eta_bar built in the barred chart.
double naturality_residual(const FlowBuilder& builder, const Diffeomorphism& g,
                           const OptimizerState& s);
ResidualSample naturality_residual_detail(const FlowBuilder& builder,
                                          const Diffeomorphism& g,
                                          const OptimizerState& s);

enum class Verdict { Equivariant, Violated };
std::string to_string(Verdict verdict);

struct ResidualReport {
  Algorithm algorithm = Algorithm::Gd;
  Family family = Family::Translation;
  int dim = 0;
  int trials = 0;
  int states = 0;  // residual evaluations that entered the statistics
  int rejected = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  Verdict verdict = Verdict::Equivariant;
  bool ambiguous = false;  // max residual fell strictly inside the gap
  std::uint64_t seed = 0;
  double tolerance = kEquivarianceTol;
  double violation_threshold = kViolationThreshold;
};

struct ClassifyOptions {
  std::vector<Family> families = {Family::Translation, Family::Euclidean,
                                  Family::SignedPermutation, Family::Affine,
                                  Family::Shear};
  int trials = 32;
  int states_per_trial = 4;
  double tolerance = kEquivarianceTol;
  double violation_threshold = kViolationThreshold;
  double max_condition = kMaxSampleCondition;
  std::uint64_t seed = 0;
};

/// Random diffeomorphisms and states are drawn per (seed, dim, family, trial),
/// so every algorithm sees the same group elements.
std::vector<ResidualReport> classify_equivariance(const FlowBuilder& builder,
                                                  const ClassifyOptions& options);

/// Whether the algorithm's limiting flow is expected to commute with the family.
bool expected_equivariant(Algorithm algorithm, Family family);
/// The equivariance group of the algorithm's flow.
std::string equivariance_group(Algorithm algorithm);

struct TableEntry {
  ResidualReport report;
  bool expected_equivariant = true;
  bool matches = true;
};

struct TableReport {
  std::vector<TableEntry> entries;  // ordered by dim, algorithm, family
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

struct TableOptions {
  std::vector<int> dims = {2, 4, 8};
  std::vector<Algorithm> algorithms = all_algorithms();
  ClassifyOptions classify;
};

/// Runs the classification for every dimension and algorithm and compares the
/// verdicts to the expected equivariance groups. Ambiguous residuals are
/// listed as mismatches.
TableReport reproduce_table(const TableOptions& options = {});

/// Uniform state in the sampling box (velocity and xi in [0.5, 2] for
/// second-order flows).
OptimizerState sample_state(Rng& rng, int dim, int order);

}  // namespace natflow
