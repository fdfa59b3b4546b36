#include "activemocap/descent.hpp"

#include <cmath>
#include <string>

#include "activemocap/errors.hpp"

namespace activemocap {

DescentResult gradient_descent(const Objective& f, Eigen::VectorXd x0,
                               const DescentOptions& opts,
                               const Eigen::VectorXd& mask) {
  const bool masked = mask.size() == x0.size();
  DescentResult res;
  res.x = std::move(x0);
  Eigen::VectorXd grad(res.x.size());
  double value = f(res.x, &grad);
  if (!std::isfinite(value)) throw DivergedError("initial energy is not finite");
  if (masked) grad.array() *= mask.array();
  res.initial_value = value;

  double step = 1.0;
  Eigen::VectorXd trial(res.x.size());
  Eigen::VectorXd trial_grad(res.x.size());
  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    res.grad_inf_norm = grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    if (res.grad_inf_norm < opts.tol_grad) {
      res.converged = true;
      break;
    }
    const double slope = grad.squaredNorm();
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= opts.shrink) {
      trial = res.x - step * grad;
      double trial_value;
      try {
        trial_value = f(trial, &trial_grad);
      } catch (const NonPositiveDepth&) {
        continue;
      }
      if (std::isnan(trial_value)) {
        throw DivergedError("energy became NaN at iteration " +
                            std::to_string(res.iterations));
      }
      if (trial_value <= value - opts.armijo * step * slope) {
        accepted = true;
        value = trial_value;
        res.x.swap(trial);
        grad.swap(trial_grad);
        if (masked) grad.array() *= mask.array();
        break;
      }
    }
    if (!accepted) break;  // no descent possible at machine precision
    step *= 2.0;
  }
  if (res.iterations == opts.max_iters) {
    res.grad_inf_norm = grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    res.converged = res.grad_inf_norm < opts.tol_grad;
  }
  if (!std::isfinite(value)) throw DivergedError("energy is not finite");
  res.final_value = value;
  return res;
}

}  // namespace activemocap
