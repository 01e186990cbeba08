#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "axiscal/errors.hpp"

namespace axiscal {

struct LMOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  /// Damping is multiplied by `damping_up` after a rejected step and divided by
  /// `damping_down` after an accepted one. Both must exceed 1.
  double damping_up = 10.0;
  double damping_down = 10.0;
  double gradient_tolerance = 1e-10;  // infinity norm of J^T r
  double step_tolerance = 1e-12;      // relative to |x|
  double residual_tolerance = 1e-12;  // absolute |r|
  /// Relative decrease of |r|^2 per accepted step below which the run stops.
  double function_tolerance = 1e-14;
  double max_damping = 1e16;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when a tolerance is non-positive or a factor <= 1.
  void validate() const;
};

enum class Termination {
  kResidualTolerance,
  kGradientTolerance,
  kStepTolerance,
  kFunctionTolerance,
  kMaxIterations,
  kDampingOverflow,
};

std::string to_string(Termination t);

struct LMReport {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;
  bool converged = false;
  /// |r| after every accepted step, starting with the initial point.
  std::vector<double> accepted_norms;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Dense Levenberg-Marquardt on (J^T J + lambda diag(J^T J)) dx = -J^T r.
/// A residual that throws at a trial point counts as a rejected step.
/// When an accepted step's actual decrease matches the linear model's
/// prediction (the problem is locally linear), the next trial is the undamped
/// Gauss-Newton step.
/// Throws InvalidArgument if the residual at x0 is not finite.
LMReport levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian, const Eigen::VectorXd& x0,
                             const LMOptions& opts = {});

/// Forward-difference Jacobian, used where the residual is not generic over
/// the scalar type.
Eigen::MatrixXd jacobian_forward_difference(const ResidualFn& residual, const Eigen::VectorXd& x,
                                            double relative_step = 1e-7);

/// Central-difference Jacobian; mostly a test oracle.
Eigen::MatrixXd jacobian_central_difference(const ResidualFn& residual, const Eigen::VectorXd& x,
                                            double step = 1e-6);

using StartSampler = std::function<Eigen::VectorXd(std::mt19937_64&)>;
using Solver = std::function<LMReport(const Eigen::VectorXd&)>;

struct RestartOutcome {
  LMReport best;
  std::size_t best_index = 0;
  std::size_t count = 0;
  std::size_t converged = 0;
  std::size_t failed = 0;  // restarts that threw
};

/// Draws all `count` starting points from one generator seeded with `seed`,
/// solves each, and keeps the lowest final residual (ties go to the lowest
/// index). `threads` > 1 solves restarts concurrently with identical results.
/// Throws ConvergenceError if every restart throws.
RestartOutcome with_restarts(const Solver& solver, const StartSampler& sampler, std::size_t count, std::uint64_t seed,
                             unsigned threads = 1);

/// Runs fn(i) for i in [0, n) over up to `threads` worker threads. Results must
/// be written to per-index storage by the caller.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace axiscal
