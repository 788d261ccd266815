#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

namespace bed {

struct GpConfig {
  int restarts = 5;
  int max_opt_iterations = 300;
  double min_noise_variance = 1e-6;
  /// Pin the observation-noise variance instead of learning it (used by the
  /// noise-free interpolation checks).
  std::optional<double> fixed_noise_variance;
};

/// Log marginal likelihood of a zero-mean GP with squared-exponential ARD
/// kernel. log_params = [log sigma_f^2, log l_1, ..., log l_D, log sigma_n^2];
/// y must already be centred.
double gp_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_centered,
                       const Eigen::VectorXd& log_params);
Eigen::VectorXd gp_log_marginal_gradient(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y_centered,
                                         const Eigen::VectorXd& log_params);

/// Gaussian-process regression surrogate with a squared-exponential kernel,
/// per-dimension lengthscales and learned observation noise. Hyperparameters
/// maximise the log marginal likelihood by multistart projected gradient
/// ascent in log-space with bound constraints.
class GpSurrogate {
 public:
  static GpSurrogate fit(const std::vector<std::vector<double>>& inputs,
                         const std::vector<double>& targets, const GpConfig& cfg = {});

  /// Posterior (mean, variance) of the latent function at x; variance is
  /// clamped at zero from below.
  std::pair<double, double> predict(const std::vector<double>& x) const;

  double prior_mean() const { return y_mean_; }
  double signal_variance() const { return sf2_; }
  const std::vector<double>& lengthscales() const { return lengthscales_; }
  double noise_variance() const { return sn2_; }
  bool degenerate_targets() const { return degenerate_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(X_.cols()); }
  std::size_t train_size() const { return static_cast<std::size_t>(X_.rows()); }

 private:
  Eigen::MatrixXd X_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double sf2_ = 1.0;
  std::vector<double> lengthscales_;
  double sn2_ = 1e-6;
  bool degenerate_ = false;
};

}  // namespace bed
