#include "bed/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "bed/numeric.hpp"

namespace bed {

PriorSpec PriorSpec::truncated_normal(double mean, double variance, double lower_bound) {
  if (!(variance > 0.0)) throw std::invalid_argument("prior: variance must be positive");
  PriorSpec p;
  p.kind_ = Kind::kTruncatedNormal;
  p.dim_ = 1;
  p.mean_ = mean;
  p.stddev_ = std::sqrt(variance);
  p.lower_bound_ = lower_bound;
  const double z = (lower_bound - mean) / p.stddev_;
  const double acceptance = norm_cdf(-z);  // P(N(mean,var) > lower_bound)
  if (!(acceptance > 0.0)) throw std::invalid_argument("prior: truncation removes all mass");
  p.log_normaliser_ = std::log(acceptance);
  return p;
}

PriorSpec PriorSpec::uniform_box(std::vector<double> lower, std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("prior: box bounds must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) throw std::invalid_argument("prior: need lower < upper per dim");
  }
  PriorSpec p;
  p.kind_ = Kind::kUniformBox;
  p.dim_ = lower.size();
  p.box_lower_ = std::move(lower);
  p.box_upper_ = std::move(upper);
  return p;
}

ParameterDraw PriorSpec::sample(RngStream& rng) const {
  if (kind_ == Kind::kUniformBox) {
    ParameterDraw theta(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      theta[i] = rng.uniform(box_lower_[i], box_upper_[i]);
    }
    return theta;
  }
  // Rejection from the untruncated normal. Acceptance ~0.84 for the paper's
  // TN(1, 1, >0); the cap guards degenerate configurations.
  constexpr long kMaxAttempts = 2'000'000;
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double draw = rng.normal(mean_, stddev_);
    if (draw > lower_bound_) return ParameterDraw{draw};
  }
  throw std::runtime_error("prior: truncated-normal acceptance rate below 1e-6");
}

double PriorSpec::log_density(const ParameterDraw& theta) const {
  if (theta.size() != dim_) throw std::invalid_argument("prior: dimension mismatch");
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  if (kind_ == Kind::kUniformBox) {
    double logp = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) logp -= std::log(box_upper_[i] - box_lower_[i]);
    return logp;
  }
  const double z = (theta[0] - mean_) / stddev_;
  return -0.5 * z * z - std::log(stddev_) - 0.91893853320467274178032973640562 - log_normaliser_;
}

double PriorSpec::density(const ParameterDraw& theta) const { return std::exp(log_density(theta)); }

bool PriorSpec::in_support(const ParameterDraw& theta) const {
  if (theta.size() != dim_) return false;
  if (kind_ == Kind::kTruncatedNormal) return theta[0] > lower_bound_;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (theta[i] < box_lower_[i] || theta[i] > box_upper_[i]) return false;
  }
  return true;
}

std::pair<std::vector<double>, std::vector<double>> PriorSpec::support_box() const {
  if (kind_ == Kind::kUniformBox) return {box_lower_, box_upper_};
  return {{lower_bound_}, {mean_ + 5.0 * stddev_}};
}

double PriorSpec::tn_mean() const {
  if (kind_ != Kind::kTruncatedNormal) throw std::logic_error("prior: not truncated normal");
  return mean_;
}
double PriorSpec::tn_stddev() const {
  if (kind_ != Kind::kTruncatedNormal) throw std::logic_error("prior: not truncated normal");
  return stddev_;
}
double PriorSpec::tn_lower_bound() const {
  if (kind_ != Kind::kTruncatedNormal) throw std::logic_error("prior: not truncated normal");
  return lower_bound_;
}

std::vector<ParameterDraw> sample_prior(const PriorSpec& prior, std::size_t count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("sample_prior: count must be positive");
  std::vector<ParameterDraw> draws;
  draws.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream sub = rng.derive(i);  // one substream per sample index
    draws.push_back(prior.sample(sub));
  }
  return draws;
}

}  // namespace bed
