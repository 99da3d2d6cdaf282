#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hartgeom/error.hpp"

namespace hartgeom {

struct LmOptions {
  int max_iterations = 100;
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double relative_cost_tolerance = 1e-9;
  double fd_step = 1e-5;  // central-difference step per parameter
  double max_lambda = 1e12;
};

struct LmResult {
  Eigen::VectorXd params;
  double final_cost = 0;                // sum of squared residuals
  std::vector<double> cost_trace;       // accepted costs, monotone non-increasing
  int iterations = 0;
  bool converged = false;
};

using LmResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using LmJacobianFn =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Central finite-difference Jacobian of the residual vector.
inline Eigen::MatrixXd lm_fd_jacobian(const LmResidualFn& residuals,
                                      const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd base = residuals(x);
  Eigen::MatrixXd jac(base.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + step;
    Eigen::VectorXd hi = residuals(probe);
    probe[j] = x[j] - step;
    Eigen::VectorXd lo = residuals(probe);
    probe[j] = x[j];
    jac.col(j) = (hi - lo) / (2.0 * step);
  }
  return jac;
}

/// Levenberg-Marquardt over a residual vector. Damping scales the diagonal
/// of J^T J (Marquardt form), multiplied by lambda_up on rejected steps and
/// lambda_down on accepted ones; terminates when the relative cost decrease
/// of an accepted step drops below relative_cost_tolerance.
inline LmResult lm_minimize(const LmResidualFn& residuals,
                            const Eigen::VectorXd& x0,
                            const LmOptions& opts = {},
                            const LmJacobianFn& jacobian = nullptr) {
  LmResult result;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw DivergedSolve("non-finite cost at LM start");
  result.cost_trace.push_back(cost);

  double lambda = opts.initial_lambda;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;
    Eigen::MatrixXd jac = jacobian ? jacobian(x, r)
                                   : lm_fd_jacobian(residuals, x, opts.fd_step);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index d = 0; d < damped.rows(); ++d)
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      Eigen::VectorXd x_try = x + delta;
      Eigen::VectorXd r_try = residuals(x_try);
      double cost_try = r_try.squaredNorm();
      if (std::isfinite(cost_try) && cost_try < cost) {
        double rel_decrease = (cost - cost_try) / std::max(cost, 1e-300);
        x = std::move(x_try);
        r = std::move(r_try);
        cost = cost_try;
        result.cost_trace.push_back(cost);
        lambda = std::max(lambda * opts.lambda_down, 1e-12);
        accepted = true;
        if (rel_decrease < opts.relative_cost_tolerance) {
          result.converged = true;
        }
        break;
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted || result.converged || cost == 0.0) {
      result.converged = result.converged || !accepted || cost == 0.0;
      break;
    }
  }
  result.params = std::move(x);
  result.final_cost = cost;
  return result;
}

}  // namespace hartgeom
