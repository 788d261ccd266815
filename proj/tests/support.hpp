#pragma once

// Shared helpers for the test suites: independent oracle implementations
// (naive simulators, closed-form moments) and classical goodness-of-fit
// machinery. Everything here is deliberately written straightforwardly and
// independently of the library internals it checks.

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "bed/rng.hpp"
#include "bed/simulators.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Regularised incomplete gamma, for chi-square tail probabilities.

inline double gamma_series_p(double a, double x) {
  double sum = 1.0 / a, term = sum, ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf_q(double a, double x) {
  // Lentz's continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// P(ChiSquare(k) > x).
inline double chi2_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * k, hx = 0.5 * x;
  return hx < a + 1.0 ? 1.0 - gamma_series_p(a, hx) : gamma_cf_q(a, hx);
}

/// Chi-square GOF p-value of observed counts against cell probabilities,
/// merging low-expectation cells (< 5) into their neighbour.
inline double chi2_gof_pvalue(const std::vector<long>& counts, const std::vector<double>& probs,
                              long total) {
  std::vector<double> exp_merged;
  std::vector<double> obs_merged;
  double e_acc = 0.0, o_acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    e_acc += probs[i] * static_cast<double>(total);
    o_acc += static_cast<double>(counts[i]);
    if (e_acc >= 5.0) {
      exp_merged.push_back(e_acc);
      obs_merged.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  if (e_acc > 0.0 && !exp_merged.empty()) {
    exp_merged.back() += e_acc;
    obs_merged.back() += o_acc;
  }
  if (exp_merged.size() < 2) throw std::runtime_error("chi2 test: not enough cells");
  double stat = 0.0;
  for (std::size_t i = 0; i < exp_merged.size(); ++i) {
    const double d = obs_merged[i] - exp_merged[i];
    stat += d * d / exp_merged[i];
  }
  return chi2_sf(stat, static_cast<double>(exp_merged.size() - 1));
}

// ---------------------------------------------------------------------------
// Independent brute-force simulators (plain per-step scalar loops).

inline bed::SimOutcome naive_death(double b, const bed::DesignPoint& design,
                                   const bed::DeathConfig& cfg, bed::RngStream& rng) {
  bed::SimOutcome out;
  long infected = cfg.initial_infected;
  const double p_step = 1.0 - std::exp(-b * cfg.dt);
  long step = 0;
  for (double tau : design.times) {
    const long target = std::lround(tau / cfg.dt);
    while (step < target) {
      infected += rng.binomial(cfg.population - infected, p_step);
      ++step;
    }
    out.values.push_back(infected);
  }
  return out;
}

inline bed::SimOutcome naive_sir(double beta, double gamma, const bed::DesignPoint& design,
                                 const bed::SirConfig& cfg, bed::RngStream& rng) {
  bed::SimOutcome out;
  long s = cfg.population - 1, i = 1, r = 0;
  long step = 0;
  for (double tau : design.times) {
    const long target = std::lround(tau / cfg.dt);
    while (step < target) {
      const long dI = rng.binomial(s, beta * static_cast<double>(i) /
                                          static_cast<double>(cfg.population));
      const long dR = rng.binomial(i, gamma);
      s -= dI;
      i += dI - dR;
      r += dR;
      ++step;
    }
    out.values.push_back(s);
    out.values.push_back(i);
    out.values.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form truncated-normal moments (lower truncation only).

inline double tn_mean(double mu, double sigma, double lower) {
  const double alpha = (lower - mu) / sigma;
  const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * M_PI);
  const double z = 0.5 * std::erfc(alpha / std::sqrt(2.0));
  return mu + sigma * phi / z;
}

inline double tn_variance(double mu, double sigma, double lower) {
  const double alpha = (lower - mu) / sigma;
  const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * M_PI);
  const double z = 0.5 * std::erfc(alpha / std::sqrt(2.0));
  const double lam = phi / z;
  return sigma * sigma * (1.0 + alpha * lam - lam * lam);
}

}  // namespace testsupport
