#include "bed/logistic.hpp"

#include <cmath>
#include <stdexcept>

namespace bed {

namespace {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& t, const Eigen::VectorXd& w,
                 double penalty_over_n) {
  const Eigen::VectorXd z = X * w;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += softplus(z[i]) - t[i] * z[i];
  }
  const double coef_sq = w.squaredNorm() - w[0] * w[0];
  return loss / static_cast<double>(z.size()) + 0.5 * penalty_over_n * coef_sq;
}

}  // namespace

double logistic_mean_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& w) {
  const Eigen::VectorXd z = X * w;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += softplus(z[i]) - targets[i] * z[i];
  }
  return loss / static_cast<double>(z.size());
}

LogisticResult fit_logistic_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                               const LogisticOptions& opts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 2 || p < 1 || targets.size() != n) {
    throw std::invalid_argument("fit_logistic_l2: bad problem dimensions");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double pen = opts.l2_penalty * inv_n;  // summed-loss penalty, mean-scaled objective

  LogisticResult result;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double f = objective(X, targets, w, pen);

  Eigen::VectorXd mu(n), grad(p), step(p);
  Eigen::MatrixXd hess(p, p);
  Eigen::MatrixXd scaled(n, p);

  for (int it = 1; it <= opts.max_iterations; ++it) {
    result.iterations = it;
    const Eigen::VectorXd z = X * w;
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = sigmoid(z[i]);

    grad.noalias() = X.transpose() * (mu - targets) * inv_n;
    grad.tail(p - 1) += pen * w.tail(p - 1);
    if (grad.norm() <= opts.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // H = (1/n) X' diag(mu(1-mu)) X + pen * diag(0,1,...,1), via a symmetric
    // rank update on sqrt-weighted rows.
    Eigen::VectorXd wt = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-12).sqrt();
    scaled = wt.asDiagonal() * X;
    hess.setZero();
    hess.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), inv_n);
    hess.diagonal().tail(p - 1).array() += pen;
    hess.diagonal().array() += 1e-12;  // guard exactly collinear columns

    step = Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower>(hess).solve(grad);
    const double slope = grad.dot(step);
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 50; ++half) {
      const Eigen::VectorXd w_new = w - scale * step;
      const double f_new = objective(X, targets, w_new, pen);
      if (f_new <= f - 1e-4 * scale * slope) {
        w = w_new;
        f = f_new;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // line search stalled at numerical precision
  }
  result.weights = std::move(w);
  return result;
}

}  // namespace bed
