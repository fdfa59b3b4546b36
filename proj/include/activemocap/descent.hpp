#pragma once

#include <functional>

#include <Eigen/Core>

namespace activemocap {

struct DescentOptions {
  double tol_grad = 1e-6;  // on the infinity norm of the (masked) gradient
  int max_iters = 500;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
};

struct DescentResult {
  Eigen::VectorXd x;
  double initial_value = 0.0;
  double final_value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Returns f(x) and writes the gradient into `grad` when non-null. May throw
// NonPositiveDepth for infeasible points; the line search treats those as
// rejected steps.
using Objective = std::function<double(const Eigen::VectorXd& x,
                                       Eigen::VectorXd* grad)>;

// Steepest descent with Armijo backtracking. Coordinates where `mask` is zero
// are held fixed (an empty mask frees every coordinate). Never accepts a step
// that increases the objective.
DescentResult gradient_descent(const Objective& f, Eigen::VectorXd x0,
                               const DescentOptions& opts,
                               const Eigen::VectorXd& mask = {});

}  // namespace activemocap
