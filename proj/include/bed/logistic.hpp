#pragma once

#include <Eigen/Dense>

namespace bed {

struct LogisticOptions {
  double l2_penalty = 1e-3;        // on the summed-loss scale, see fit_logistic_l2
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

struct LogisticResult {
  Eigen::VectorXd weights;  // weights[0] is the intercept
  bool converged = false;
  int iterations = 0;
};

/// L2-penalised logistic regression by damped Newton (IRLS with an Armijo
/// line search). Minimises
///   (1/n) [ sum_i ce(w; x_i, t_i) + (lambda/2) ||w_1..p||^2 ]
/// i.e. the penalty is applied on the summed-loss scale and the intercept is
/// never penalised. X must carry a leading column of ones. The penalty keeps
/// the optimum finite under complete separation; non-convergence within the
/// iteration budget returns the best iterate with converged = false.
LogisticResult fit_logistic_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                               const LogisticOptions& opts);

/// Mean cross-entropy of w on (X, targets); used for validation scoring.
double logistic_mean_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& w);

}  // namespace bed
