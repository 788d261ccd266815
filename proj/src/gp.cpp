#include "bed/gp.hpp"

#include <cmath>
#include <stdexcept>

#include "bed/numeric.hpp"

namespace bed {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double sf2,
                              const Eigen::VectorXd& inv_ell2) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = sf2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double diff = X(i, d) - X(j, d);
        s += diff * diff * inv_ell2[d];
      }
      K(i, j) = K(j, i) = sf2 * std::exp(-0.5 * s);
    }
  }
  return K;
}

// Cholesky with escalating jitter (up to 1e-6) to keep K + sn2 I positive
// definite under near-duplicate inputs.
bool robust_llt(Eigen::MatrixXd K, Eigen::LLT<Eigen::MatrixXd>& out) {
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    out.compute(K);
    if (out.info() == Eigen::Success) return true;
    const double add = (jitter == 0.0) ? 1e-12 : jitter * 9.0;
    K.diagonal().array() += add;
    jitter += add;
    if (jitter > 1e-6) break;
  }
  return false;
}

struct Bounds {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd clamp(const Eigen::VectorXd& v) const {
    return v.cwiseMax(lo).cwiseMin(hi);
  }
};

}  // namespace

double gp_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& log_params) {
  const Eigen::Index n = X.rows(), dim = X.cols();
  const double sf2 = std::exp(log_params[0]);
  Eigen::VectorXd inv_ell2(dim);
  for (Eigen::Index d = 0; d < dim; ++d) inv_ell2[d] = std::exp(-2.0 * log_params[1 + d]);
  const double sn2 = std::exp(log_params[dim + 1]);

  Eigen::MatrixXd K = kernel_matrix(X, sf2, inv_ell2);
  K.diagonal().array() += sn2;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!robust_llt(std::move(K), llt)) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
  return -0.5 * y.dot(alpha) - log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::VectorXd gp_log_marginal_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& log_params) {
  const Eigen::Index n = X.rows(), dim = X.cols();
  const double sf2 = std::exp(log_params[0]);
  Eigen::VectorXd inv_ell2(dim);
  for (Eigen::Index d = 0; d < dim; ++d) inv_ell2[d] = std::exp(-2.0 * log_params[1 + d]);
  const double sn2 = std::exp(log_params[dim + 1]);

  const Eigen::MatrixXd Kf = kernel_matrix(X, sf2, inv_ell2);
  Eigen::MatrixXd K = Kf;
  K.diagonal().array() += sn2;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!robust_llt(std::move(K), llt)) {
    return Eigen::VectorXd::Zero(log_params.size());
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  // dL/dtheta = 0.5 tr((alpha alpha' - K^-1) dK/dtheta)
  const Eigen::MatrixXd A = alpha * alpha.transpose() - Kinv;

  Eigen::VectorXd grad(log_params.size());
  grad[0] = 0.5 * A.cwiseProduct(Kf).sum();  // dK/dlog sf2 = Kf
  for (Eigen::Index d = 0; d < dim; ++d) {
    // dK/dlog l_d = Kf .* sqdist_d / l_d^2
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double diff = X(i, d) - X(j, d);
        acc += A(i, j) * Kf(i, j) * diff * diff * inv_ell2[d];
      }
    }
    grad[1 + d] = 0.5 * acc;
  }
  grad[dim + 1] = 0.5 * sn2 * A.trace();  // dK/dlog sn2 = sn2 I
  return grad;
}

GpSurrogate GpSurrogate::fit(const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& targets, const GpConfig& cfg) {
  if (inputs.size() < 2 || inputs.size() != targets.size()) {
    throw std::invalid_argument("gp_fit: need at least two (input, target) observations");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index dim = static_cast<Eigen::Index>(inputs.front().size());
  GpSurrogate gp;
  gp.X_.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (inputs[i].size() != static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("gp_fit: ragged input dimensions");
    }
    for (Eigen::Index d = 0; d < dim; ++d) gp.X_(i, d) = inputs[i][d];
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = targets[i];
  gp.y_mean_ = y.mean();
  const Eigen::VectorXd yc = y.array() - gp.y_mean_;
  const double var_y = yc.squaredNorm() / static_cast<double>(n);

  Eigen::VectorXd range(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double r = gp.X_.col(d).maxCoeff() - gp.X_.col(d).minCoeff();
    range[d] = r > 1e-12 ? r : 1.0;
  }

  gp.lengthscales_.assign(dim, 0.0);
  if (var_y < 1e-15) {
    // Degenerate targets: flat posterior at the common value.
    gp.degenerate_ = true;
    gp.sf2_ = 1e-8;
    for (Eigen::Index d = 0; d < dim; ++d) gp.lengthscales_[d] = range[d];
    gp.sn2_ = cfg.fixed_noise_variance.value_or(cfg.min_noise_variance);
  } else {
    Bounds bounds;
    bounds.lo.resize(dim + 2);
    bounds.hi.resize(dim + 2);
    bounds.lo[0] = std::log(1e-8);
    bounds.hi[0] = std::log(std::max(100.0 * var_y, 1e-6));
    for (Eigen::Index d = 0; d < dim; ++d) {
      bounds.lo[1 + d] = std::log(1e-2 * range[d]);
      bounds.hi[1 + d] = std::log(1e2 * range[d]);
    }
    if (cfg.fixed_noise_variance) {
      bounds.lo[dim + 1] = bounds.hi[dim + 1] = std::log(*cfg.fixed_noise_variance);
    } else {
      bounds.lo[dim + 1] = std::log(cfg.min_noise_variance);
      bounds.hi[dim + 1] = std::log(std::max(var_y, 10.0 * cfg.min_noise_variance));
    }

    // Multistart projected gradient ascent: one data-driven start plus
    // low-discrepancy starts across the log-space box.
    std::vector<Eigen::VectorXd> starts;
    Eigen::VectorXd s0(dim + 2);
    s0[0] = std::log(std::max(var_y, 1e-8));
    for (Eigen::Index d = 0; d < dim; ++d) s0[1 + d] = std::log(range[d] / 3.0);
    s0[dim + 1] = std::log(cfg.fixed_noise_variance.value_or(
        std::max(0.1 * var_y, cfg.min_noise_variance)));
    starts.push_back(bounds.clamp(s0));
    for (int r = 1; r < cfg.restarts; ++r) {
      const auto h = halton_point(static_cast<std::size_t>(r - 1), dim + 2);
      Eigen::VectorXd s(dim + 2);
      for (Eigen::Index k = 0; k < dim + 2; ++k) {
        s[k] = bounds.lo[k] + h[static_cast<std::size_t>(k)] * (bounds.hi[k] - bounds.lo[k]);
      }
      starts.push_back(s);
    }

    double best_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_params = starts.front();
    for (const auto& start : starts) {
      Eigen::VectorXd params = start;
      double value = gp_log_marginal(gp.X_, yc, params);
      double step = 0.1;
      for (int it = 0; it < cfg.max_opt_iterations && step > 1e-12; ++it) {
        const Eigen::VectorXd grad = gp_log_marginal_gradient(gp.X_, yc, params);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-7) break;
        bool moved = false;
        while (step > 1e-12) {
          const Eigen::VectorXd trial = bounds.clamp(params + step * grad);
          const double trial_value = gp_log_marginal(gp.X_, yc, trial);
          if (trial_value > value) {
            params = trial;
            value = trial_value;
            step *= 1.5;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      if (value > best_value) {
        best_value = value;
        best_params = params;
      }
    }
    gp.sf2_ = std::exp(best_params[0]);
    for (Eigen::Index d = 0; d < dim; ++d) gp.lengthscales_[d] = std::exp(best_params[1 + d]);
    gp.sn2_ = std::exp(best_params[dim + 1]);
  }

  Eigen::VectorXd inv_ell2(dim);
  for (Eigen::Index d = 0; d < dim; ++d) inv_ell2[d] = 1.0 / (gp.lengthscales_[d] * gp.lengthscales_[d]);
  Eigen::MatrixXd K = kernel_matrix(gp.X_, gp.sf2_, inv_ell2);
  K.diagonal().array() += gp.sn2_;
  if (!robust_llt(std::move(K), gp.chol_)) {
    throw std::runtime_error("gp_fit: kernel matrix not positive definite at the optimum");
  }
  gp.alpha_ = gp.chol_.solve(yc);
  return gp;
}

std::pair<double, double> GpSurrogate::predict(const std::vector<double>& x) const {
  if (x.size() != input_dim()) throw std::invalid_argument("gp_predict: dimension mismatch");
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < X_.cols(); ++d) {
      const double diff = x[static_cast<std::size_t>(d)] - X_(i, d);
      s += diff * diff / (lengthscales_[d] * lengthscales_[d]);
    }
    k_star[i] = sf2_ * std::exp(-0.5 * s);
  }
  const double mean = y_mean_ + k_star.dot(alpha_);
  const double variance = sf2_ - k_star.dot(chol_.solve(k_star));
  return {mean, std::max(variance, 0.0)};
}

}  // namespace bed
