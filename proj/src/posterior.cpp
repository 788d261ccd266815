#include "bed/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bed/numeric.hpp"

namespace bed {

WeightedPrior compute_weights(const std::vector<RatioModel>& models, const SimOutcome& y_star,
                              const std::vector<ParameterDraw>& bank, double log_ratio_clip) {
  if (models.size() != bank.size() || bank.empty()) {
    throw std::invalid_argument("compute_weights: need one ratio model per prior draw");
  }
  const std::size_t n = bank.size();
  std::vector<double> log_w(n);
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double lr = models[i].log_ratio(y_star);
    if (!std::isfinite(lr)) lr = -log_ratio_clip;
    log_w[i] = std::clamp(lr, -log_ratio_clip, log_ratio_clip);
    max_lw = std::max(max_lw, log_w[i]);
  }
  if (!(max_lw > -log_ratio_clip + 1e-12)) {
    throw std::runtime_error(
        "compute_weights: degenerate weights, observation incompatible with every prior draw");
  }
  WeightedPrior wp;
  wp.draws = bank;
  wp.raw_weights.resize(n);
  wp.weights.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wp.raw_weights[i] = std::exp(log_w[i]);
    total += std::exp(log_w[i] - max_lw);
  }
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wp.weights[i] = std::exp(log_w[i] - max_lw) / total;
    sum_sq += wp.weights[i] * wp.weights[i];
  }
  wp.ess = 1.0 / sum_sq;
  return wp;
}

PosteriorSamples resample(const WeightedPrior& wp, std::size_t count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("resample: count must be positive");
  std::vector<double> cumulative(wp.weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < wp.weights.size(); ++i) {
    acc += wp.weights[i];
    cumulative[i] = acc;
  }
  PosteriorSamples out;
  out.draws.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = rng.uniform01() * acc;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()), wp.draws.size() - 1);
    out.draws.push_back(wp.draws[idx]);
  }
  return out;
}

KdeDensity KdeDensity::fit(const std::vector<ParameterDraw>& samples,
                           const std::vector<double>& range_hint) {
  if (samples.size() < 2) throw std::invalid_argument("kde_fit: need at least two samples");
  const std::size_t dim = samples.front().size();
  KdeDensity kde;
  kde.bandwidths_.resize(dim);
  kde.floored_.assign(dim, false);

  // Silverman's rule per dimension: h = sd * (4 / ((d+2) n))^(1/(d+4)).
  const double n = static_cast<double>(samples.size());
  for (std::size_t d = 0; d < dim; ++d) {
    double m = 0.0;
    for (const auto& s : samples) m += s[d];
    m /= n;
    double ss = 0.0;
    for (const auto& s : samples) ss += (s[d] - m) * (s[d] - m);
    const double sd = std::sqrt(ss / n);
    const double factor =
        std::pow(4.0 / ((static_cast<double>(dim) + 2.0) * n), 1.0 / (static_cast<double>(dim) + 4.0));
    double h = sd * factor;
    if (!(h > 1e-12)) {  // zero variance up to accumulation round-off
      const double range = d < range_hint.size() && range_hint[d] > 0.0 ? range_hint[d] : 1.0;
      h = 1e-3 * range;
      kde.floored_[d] = true;
    }
    kde.bandwidths_[d] = h;
  }

  // Categorical resampling repeats bank members verbatim; collapsing the
  // duplicates makes density evaluation O(unique * grid) instead of O(n * grid).
  std::map<ParameterDraw, double> grouped;
  for (const auto& s : samples) grouped[s] += 1.0;
  kde.points_.reserve(grouped.size());
  kde.point_weights_.reserve(grouped.size());
  for (auto& [point, weight] : grouped) {
    kde.points_.push_back(point);
    kde.point_weights_.push_back(weight);
  }
  kde.total_weight_ = n;
  return kde;
}

double KdeDensity::density(const ParameterDraw& x) const {
  if (x.size() != dim()) throw std::invalid_argument("kde: dimension mismatch");
  double norm = total_weight_;
  for (double h : bandwidths_) norm *= h;
  double acc = 0.0;
  for (std::size_t u = 0; u < points_.size(); ++u) {
    double k = point_weights_[u];
    for (std::size_t d = 0; d < x.size(); ++d) {
      k *= norm_pdf((x[d] - points_[u][d]) / bandwidths_[d]);
    }
    acc += k;
  }
  return acc / norm;
}

std::vector<DimensionSummary> summarize(const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw std::invalid_argument("summarize: empty sample set");
  const std::size_t dim = samples.draws.front().size();
  std::vector<DimensionSummary> out(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<double> col;
    col.reserve(samples.draws.size());
    for (const auto& s : samples.draws) col.push_back(s[d]);
    out[d].mean = mean(col);
    out[d].median = quantile(col, 0.5);
    out[d].lo95 = quantile(col, 0.025);
    out[d].hi95 = quantile(col, 0.975);
  }
  return out;
}

std::vector<double> exact_death_posterior(const SimOutcome& y_star, const DesignPoint& d_star,
                                          const PriorSpec& prior, const std::vector<double>& b_grid,
                                          const DeathConfig& cfg) {
  if (b_grid.size() < 2) throw std::invalid_argument("exact_death_posterior: grid too small");
  std::vector<double> log_post(b_grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < b_grid.size(); ++j) {
    log_post[j] =
        death_log_likelihood(b_grid[j], d_star, y_star, cfg) + prior.log_density({b_grid[j]});
    best = std::max(best, log_post[j]);
  }
  if (!std::isfinite(best)) {
    throw std::runtime_error("exact_death_posterior: zero posterior mass on the grid");
  }
  std::vector<double> density(b_grid.size());
  for (std::size_t j = 0; j < b_grid.size(); ++j) density[j] = std::exp(log_post[j] - best);
  const double mass = trapezoid(b_grid, density);
  for (auto& v : density) v /= mass;
  return density;
}

std::vector<double> uniform_grid(double lower, double upper, std::size_t points) {
  if (points < 2 || !(lower < upper)) throw std::invalid_argument("uniform_grid: bad arguments");
  std::vector<double> grid(points);
  const double step = (upper - lower) / static_cast<double>(points);
  for (std::size_t j = 0; j < points; ++j) {
    grid[j] = lower + step * static_cast<double>(j + 1);
  }
  return grid;
}

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values) {
  double acc = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    acc += 0.5 * (values[j] + values[j - 1]) * (grid[j] - grid[j - 1]);
  }
  return acc;
}

double grid_quantile(const std::vector<double>& grid, const std::vector<double>& density,
                     double q) {
  if (grid.size() != density.size() || grid.size() < 2) {
    throw std::invalid_argument("grid_quantile: bad gridded density");
  }
  std::vector<double> cdf(grid.size(), 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    cdf[j] = cdf[j - 1] + 0.5 * (density[j] + density[j - 1]) * (grid[j] - grid[j - 1]);
  }
  const double total = cdf.back();
  const double target = q * total;
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.begin()) return grid.front();
  if (it == cdf.end()) return grid.back();
  const std::size_t j = static_cast<std::size_t>(it - cdf.begin());
  const double span = cdf[j] - cdf[j - 1];
  const double frac = span > 0.0 ? (target - cdf[j - 1]) / span : 0.0;
  return grid[j - 1] + frac * (grid[j] - grid[j - 1]);
}

}  // namespace bed
