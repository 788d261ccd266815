#include "bed/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bed/numeric.hpp"

namespace bed {

double expected_improvement(double mean, double variance, double incumbent_best, double xi) {
  if (xi < 0.0) throw std::invalid_argument("expected_improvement: xi must be non-negative");
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = mean - incumbent_best - xi;
  if (sigma <= 0.0) return 0.0;
  const double z = gain / sigma;
  return std::max(gain * norm_cdf(z) + sigma * norm_pdf(z), 0.0);
}

OrderedSimplexTransform::OrderedSimplexTransform(std::size_t dim, double lower, double upper)
    : dim_(dim), lower_(lower), upper_(upper) {
  if (dim < 1) throw std::invalid_argument("transform: dim must be positive");
  if (!(lower < upper)) throw std::invalid_argument("transform: need lower < upper");
}

std::vector<double> OrderedSimplexTransform::to_times(const std::vector<double>& unit) const {
  if (unit.size() != dim_) throw std::invalid_argument("transform: dimension mismatch");
  std::vector<double> times(dim_);
  double head = upper_ - lower_;  // tau_{k+1} - lower, walking down from the top
  for (std::size_t k = dim_; k-- > 0;) {
    const double u = std::clamp(unit[k], 1e-12, 1.0 - 1e-12);
    head *= std::pow(u, 1.0 / static_cast<double>(k + 1));
    times[k] = lower_ + head;
  }
  return times;
}

std::vector<double> OrderedSimplexTransform::to_unit_box(const std::vector<double>& times) const {
  if (times.size() != dim_) throw std::invalid_argument("transform: dimension mismatch");
  std::vector<double> unit(dim_);
  double prev = times[0] - lower_;
  if (!(prev > 0.0)) throw std::invalid_argument("transform: times must exceed the lower bound");
  for (std::size_t k = 0; k < dim_; ++k) {
    const double next = (k + 1 < dim_) ? times[k + 1] - lower_ : upper_ - lower_;
    if (k + 1 < dim_ && !(times[k] < times[k + 1])) {
      throw std::invalid_argument("transform: times must be strictly increasing");
    }
    unit[k] = std::pow((times[k] - lower_) / next, static_cast<double>(k + 1));
  }
  return unit;
}

namespace {

double ei_at(const GpSurrogate& gp, const std::vector<double>& u, double best, double xi) {
  const auto [mean, variance] = gp.predict(u);
  return expected_improvement(mean, variance, best, xi);
}

// Golden-section maximisation of EI along one coordinate.
double golden_polish_coord(const GpSurrogate& gp, std::vector<double>& u, std::size_t d,
                           double lo, double hi, double best, double xi) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  u[d] = x1;
  double f1 = ei_at(gp, u, best, xi);
  u[d] = x2;
  double f2 = ei_at(gp, u, best, xi);
  for (int it = 0; it < 40 && (b - a) > 1e-6; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      u[d] = x2;
      f2 = ei_at(gp, u, best, xi);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      u[d] = x1;
      f1 = ei_at(gp, u, best, xi);
    }
  }
  u[d] = f1 > f2 ? x1 : x2;
  return std::max(f1, f2);
}

}  // namespace

ProposeResult propose_next(const GpSurrogate& surrogate, const OrderedSimplexTransform& transform,
                           double incumbent_best, double xi, std::size_t candidates,
                           RngStream& rng) {
  const std::size_t dim = transform.dim();
  if (surrogate.input_dim() != dim) {
    throw std::invalid_argument("propose_next: surrogate/transform dimension mismatch");
  }
  // Cranley-Patterson rotation keeps the candidate set low-discrepancy while
  // varying it across calls.
  std::vector<double> shift(dim);
  for (auto& s : shift) s = rng.uniform01();

  struct Scored {
    double ei;
    std::vector<double> u;
  };
  std::vector<Scored> top;
  for (std::size_t i = 0; i < candidates; ++i) {
    std::vector<double> u = halton_point(i, dim);
    for (std::size_t d = 0; d < dim; ++d) {
      u[d] += shift[d];
      if (u[d] >= 1.0) u[d] -= 1.0;
      u[d] = std::clamp(u[d], 1e-9, 1.0 - 1e-9);
    }
    const double ei = ei_at(surrogate, u, incumbent_best, xi);
    top.push_back({ei, std::move(u)});
    std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.ei > b.ei; });
    if (top.size() > 4) top.pop_back();
  }

  ProposeResult result;
  if (top.front().ei <= 0.0) {
    // Flat EI landscape: fall back to pure exploration.
    result.unit.resize(dim);
    for (auto& u : result.unit) u = rng.uniform01();
    result.pure_exploration = true;
    result.design.times = transform.to_times(result.unit);
    return result;
  }

  double best_ei = -1.0;
  std::vector<double> best_u;
  for (auto& cand : top) {
    std::vector<double> u = cand.u;
    double ei = cand.ei;
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double lo = std::max(1e-9, u[d] - 0.1);
        const double hi = std::min(1.0 - 1e-9, u[d] + 0.1);
        ei = golden_polish_coord(surrogate, u, d, lo, hi, incumbent_best, xi);
      }
    }
    if (ei > best_ei) {
      best_ei = ei;
      best_u = u;
    }
  }
  result.unit = std::move(best_u);
  result.design.times = transform.to_times(result.unit);
  return result;
}

namespace {

UtilityEstimate evaluate_with_retry(const UtilityObjective& objective, const DesignPoint& design,
                                    EstimatorKind estimator, const QuadratureConfig& quad,
                                    RngStream& rng, std::size_t iteration, int& retries) {
  try {
    RngStream sub = rng.derive(iteration);
    return evaluate_utility(objective, design, estimator, quad, sub);
  } catch (const std::exception&) {
    retries = 1;
    RngStream sub = rng.derive(iteration + 0x9000);
    return evaluate_utility(objective, design, estimator, quad, sub);
  }
}

}  // namespace

BoTrace optimize_utility_bo(const UtilityObjective& objective, const DesignSpace& space,
                            const BoConfig& cfg, EstimatorKind estimator,
                            const QuadratureConfig& quad, RngStream& rng) {
  if (cfg.init_count < 2 || cfg.budget < cfg.init_count) {
    throw std::invalid_argument("optimize_utility_bo: need budget >= init_count >= 2");
  }
  const OrderedSimplexTransform transform(space.dim, space.lower, space.upper);
  RngStream eval_rng = rng.derive(1);
  RngStream propose_rng = rng.derive(2);
  RngStream init_rng = rng.derive(3);

  BoTrace trace;
  double best = -std::numeric_limits<double>::infinity();

  std::vector<double> init_shift(space.dim);
  for (auto& s : init_shift) s = init_rng.uniform01();

  for (std::size_t it = 0; it < cfg.budget; ++it) {
    BoEvaluation ev;
    ev.iteration = it;
    ev.is_initial = it < cfg.init_count;
    if (ev.is_initial) {
      ev.unit = halton_point(it, space.dim);
      for (std::size_t d = 0; d < space.dim; ++d) {
        ev.unit[d] += init_shift[d];
        if (ev.unit[d] >= 1.0) ev.unit[d] -= 1.0;
        ev.unit[d] = std::clamp(ev.unit[d], 1e-9, 1.0 - 1e-9);
      }
      ev.design.times = transform.to_times(ev.unit);
    } else {
      std::vector<std::vector<double>> inputs;
      std::vector<double> values;
      for (const auto& e : trace.evaluations) {
        if (!e.estimate.valid()) continue;
        inputs.push_back(e.unit);
        values.push_back(e.estimate.value);
      }
      if (inputs.size() < 2) {
        // Not enough successful evaluations to fit a surrogate yet.
        ev.unit.resize(space.dim);
        for (auto& u : ev.unit) u = propose_rng.uniform01();
        ev.design.times = transform.to_times(ev.unit);
        ev.pure_exploration = true;
      } else {
        const GpSurrogate surrogate = GpSurrogate::fit(inputs, values, cfg.gp);
        ProposeResult proposal =
            propose_next(surrogate, transform, best, cfg.xi, cfg.candidates, propose_rng);
        ev.unit = std::move(proposal.unit);
        ev.design = std::move(proposal.design);
        ev.pure_exploration = proposal.pure_exploration;
      }
    }
    try {
      ev.estimate =
          evaluate_with_retry(objective, ev.design, estimator, quad, eval_rng, it, ev.retries);
    } catch (const std::exception&) {
      ev.estimate = UtilityEstimate{};  // invalid; point skipped but budget consumed
      ev.estimate.design = ev.design;
      ev.retries = 2;
    }
    if (ev.estimate.valid() && ev.estimate.value > best) {
      best = ev.estimate.value;
      trace.incumbent_index = trace.evaluations.size();
    }
    ev.cumulative_best = best;
    trace.evaluations.push_back(std::move(ev));
  }

  // Posterior-mean incumbent from the final surrogate, exposed as an
  // alternative to the best observed value.
  std::vector<std::vector<double>> inputs;
  std::vector<double> values;
  for (const auto& e : trace.evaluations) {
    if (!e.estimate.valid()) continue;
    inputs.push_back(e.unit);
    values.push_back(e.estimate.value);
  }
  trace.gp_mean_incumbent_index = trace.incumbent_index;
  if (inputs.size() >= 2) {
    const GpSurrogate final_gp = GpSurrogate::fit(inputs, values, cfg.gp);
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
      if (!trace.evaluations[i].estimate.valid()) continue;
      const double m = final_gp.predict(trace.evaluations[i].unit).first;
      if (m > best_mean) {
        best_mean = m;
        trace.gp_mean_incumbent_index = i;
      }
    }
  }
  return trace;
}

GridSearchResult optimize_utility_grid(const UtilityObjective& objective, const DesignSpace& space,
                                       EstimatorKind estimator, const QuadratureConfig& quad,
                                       RngStream& rng) {
  const std::vector<DesignPoint> grid = make_grid(space);
  GridSearchResult result;
  result.curve = evaluate_on_grid(objective, grid, estimator, quad, rng);
  std::size_t best = grid.size();
  for (std::size_t g = 0; g < result.curve.size(); ++g) {
    if (!result.curve[g].valid()) continue;
    if (best == grid.size() || result.curve[g].value > result.curve[best].value) {
      best = g;  // strict improvement only: ties resolve to the smaller tau
    }
  }
  if (best == grid.size()) throw std::runtime_error("grid search: every point failed");
  result.best = grid[best];
  result.best_estimate = result.curve[best];
  return result;
}

}  // namespace bed
