#include "axiscal/optim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>

#include <Eigen/Dense>

namespace axiscal {

void LMOptions::validate() const {
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
  if (!(initial_damping > 0.0)) throw InvalidArgument("initial damping must be positive");
  if (!(damping_up > 1.0) || !(damping_down > 1.0)) throw InvalidArgument("damping factors must exceed 1");
  if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0) || !(residual_tolerance > 0.0) ||
      !(function_tolerance > 0.0)) {
    throw InvalidArgument("LM tolerances must be positive");
  }
  if (!(max_damping > initial_damping)) throw InvalidArgument("max damping must exceed the initial damping");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kResidualTolerance: return "residual_tolerance";
    case Termination::kGradientTolerance: return "gradient_tolerance";
    case Termination::kStepTolerance: return "step_tolerance";
    case Termination::kFunctionTolerance: return "function_tolerance";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kDampingOverflow: return "damping_overflow";
  }
  return "unknown";
}

namespace {

bool try_residual(const ResidualFn& residual, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  try {
    out = residual(x);
  } catch (const Error&) {
    return false;
  }
  return out.allFinite();
}

}  // namespace

LMReport levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian, const Eigen::VectorXd& x0,
                             const LMOptions& opts) {
  opts.validate();
  if (!x0.allFinite()) throw InvalidArgument("LM start point is not finite");

  LMReport report;
  report.x = x0;
  Eigen::VectorXd r = residual(x0);
  if (!r.allFinite()) throw InvalidArgument("residual is not finite at the start point");
  double cost = r.squaredNorm();
  report.residual_norm = std::sqrt(cost);
  report.accepted_norms.push_back(report.residual_norm);

  auto finish = [&](Termination t, bool converged) {
    report.termination = t;
    report.converged = converged;
    return report;
  };

  if (report.residual_norm <= opts.residual_tolerance) return finish(Termination::kResidualTolerance, true);

  double lambda = opts.initial_damping;
  bool gauss_newton_next = false;
  Eigen::VectorXd r_trial;

  while (report.iterations < opts.max_iterations) {
    const Eigen::MatrixXd j = jacobian(report.x);
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) return finish(Termination::kGradientTolerance, true);
    const Eigen::MatrixXd a = j.transpose() * j;
    Eigen::VectorXd diag = a.diagonal();
    const double diag_floor = 1e-12 * std::max(1.0, diag.maxCoeff());
    diag = diag.cwiseMax(diag_floor);

    bool accepted = false;
    bool first_trial = true;
    while (!accepted) {
      const double lam = gauss_newton_next ? 0.0 : lambda;
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lam * diag;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);

      // A step that is only small because damping grew says nothing about convergence.
      if (first_trial && step.allFinite() &&
          step.norm() <= opts.step_tolerance * (report.x.norm() + opts.step_tolerance)) {
        return finish(Termination::kStepTolerance, true);
      }
      first_trial = false;

      const Eigen::VectorXd x_trial = report.x + step;
      const bool ok = step.allFinite() && try_residual(residual, x_trial, r_trial);
      const double cost_trial = ok ? r_trial.squaredNorm() : 0.0;
      if (ok && cost_trial < cost) {
        const double predicted = cost - (r + j * step).squaredNorm();
        const double actual = cost - cost_trial;
        const double gain = predicted > 0.0 ? actual / predicted : 0.0;

        report.x = x_trial;
        r = r_trial;
        const double previous = cost;
        cost = cost_trial;
        report.residual_norm = std::sqrt(cost);
        report.accepted_norms.push_back(report.residual_norm);
        ++report.iterations;
        accepted = true;

        if (!gauss_newton_next) lambda = std::max(lambda / opts.damping_down, 1e-300);
        gauss_newton_next = std::abs(gain - 1.0) < 1e-6;

        if (report.residual_norm <= opts.residual_tolerance) return finish(Termination::kResidualTolerance, true);
        if (previous - cost <= opts.function_tolerance * previous) return finish(Termination::kFunctionTolerance, true);
      } else if (gauss_newton_next) {
        gauss_newton_next = false;
      } else {
        lambda *= opts.damping_up;
        if (lambda > opts.max_damping) return finish(Termination::kDampingOverflow, false);
      }
    }
  }
  return finish(Termination::kMaxIterations, false);
}

Eigen::MatrixXd jacobian_forward_difference(const ResidualFn& residual, const Eigen::VectorXd& x,
                                            double relative_step) {
  const Eigen::VectorXd r0 = residual(x);
  Eigen::MatrixXd j(r0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = relative_step * std::max(std::abs(x(i)), 1e-2);
    xp(i) = x(i) + h;
    const double actual_h = xp(i) - x(i);
    j.col(i) = (residual(xp) - r0) / actual_h;
    xp(i) = x(i);
  }
  return j;
}

Eigen::MatrixXd jacobian_central_difference(const ResidualFn& residual, const Eigen::VectorXd& x, double step) {
  Eigen::MatrixXd j;
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    const Eigen::VectorXd plus = residual(xp);
    xp(i) = x(i) - step;
    const Eigen::VectorXd minus = residual(xp);
    xp(i) = x(i);
    if (i == 0) j.resize(plus.size(), x.size());
    j.col(i) = (plus - minus) / (2.0 * step);
  }
  return j;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RestartOutcome with_restarts(const Solver& solver, const StartSampler& sampler, std::size_t count, std::uint64_t seed,
                             unsigned threads) {
  if (count == 0) throw InvalidArgument("restart count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> starts;
  starts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) starts.push_back(sampler(rng));

  std::vector<std::optional<LMReport>> reports(count);
  std::vector<std::string> messages(count);
  parallel_for(count, threads, [&](std::size_t i) {
    try {
      reports[i] = solver(starts[i]);
    } catch (const Error& e) {
      messages[i] = e.what();
    }
  });

  RestartOutcome out;
  out.count = count;
  bool have = false;
  for (std::size_t i = 0; i < count; ++i) {
    if (!reports[i]) {
      ++out.failed;
      continue;
    }
    if (reports[i]->converged) ++out.converged;
    if (!have || reports[i]->residual_norm < out.best.residual_norm) {
      out.best = *reports[i];
      out.best_index = i;
      have = true;
    }
  }
  if (!have) {
    throw ConvergenceError("all " + std::to_string(count) + " restarts failed; first error: " + messages.front(),
                           std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace axiscal
