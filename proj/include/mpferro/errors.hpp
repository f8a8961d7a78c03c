#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace mpferro {

/// Malformed input: bad config key, invalid model, wrong dimensions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solve ran out of iterations. Carries the best iterate it saw.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best, double residual)
      : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}

  const Eigen::VectorXd& best_iterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
};

}  // namespace mpferro
