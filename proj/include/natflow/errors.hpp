#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace natflow {

/// A function was evaluated where it (or one of its derivatives) is not finite.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be inverted is too badly conditioned. Carries the
/// parameter point and the chart label where it happened.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, Eigen::VectorXd theta,
                   double condition, std::string chart = "reference")
      : std::runtime_error(what),
        theta_(std::move(theta)),
        condition_(condition),
        chart_(std::move(chart)) {}

  const Eigen::VectorXd& theta() const { return theta_; }
  double condition() const { return condition_; }
  const std::string& chart() const { return chart_; }

 private:
  Eigen::VectorXd theta_;
  double condition_;
  std::string chart_;
};

/// Integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Invalid experiment configuration or inconsistent inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace natflow
