#include "bed/simulators.hpp"

#include <cmath>
#include <stdexcept>

#include "bed/numeric.hpp"

namespace bed {

namespace {

std::vector<long> snap_to_steps(const DesignPoint& design, double dt) {
  std::vector<long> steps(design.dim());
  for (std::size_t k = 0; k < design.dim(); ++k) {
    steps[k] = std::lround(design.times[k] / dt);
  }
  return steps;
}

}  // namespace

double death_infection_prob(double b, double t) {
  if (b < 0.0 || t < 0.0 || !std::isfinite(b) || !std::isfinite(t)) {
    throw std::invalid_argument("death_infection_prob: need b >= 0 and t >= 0");
  }
  return -std::expm1(-b * t);
}

DeathModel::DeathModel(DeathConfig cfg) : cfg_(cfg) {
  if (cfg_.population < 1) throw std::invalid_argument("death: population must be positive");
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("death: dt must be positive");
  if (cfg_.initial_infected < 0 || cfg_.initial_infected > cfg_.population) {
    throw std::invalid_argument("death: initial_infected outside [0, population]");
  }
}

SimOutcome DeathModel::simulate(const ParameterDraw& theta, const DesignPoint& design,
                                RngStream& rng) const {
  if (theta.size() != 1) throw std::invalid_argument("death: theta must be 1-D");
  const double b = theta[0];
  if (b < 0.0) throw std::invalid_argument("death: rate b must be non-negative");
  const auto steps = snap_to_steps(design, cfg_.dt);
  SimOutcome out;
  out.values.resize(steps.size());
  long infected = cfg_.initial_infected;
  long prev_step = 0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const long span = steps[k] - prev_step;
    if (span > 0) {
      const double p = -std::expm1(-b * cfg_.dt * static_cast<double>(span));
      infected += rng.binomial(cfg_.population - infected, p);
      prev_step = steps[k];
    }
    out.values[k] = infected;
  }
  return out;
}

SirModel::SirModel(SirConfig cfg) : cfg_(cfg) {
  if (cfg_.population < 2) throw std::invalid_argument("sir: population must be at least 2");
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("sir: dt must be positive");
}

SimOutcome SirModel::simulate(const ParameterDraw& theta, const DesignPoint& design,
                              RngStream& rng) const {
  if (theta.size() != 2) throw std::invalid_argument("sir: theta must be (beta, gamma)");
  const double beta = theta[0], gamma = theta[1];
  if (beta < 0.0 || beta > 1.0 || gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("sir: beta and gamma must lie in [0,1]");
  }
  const auto steps = snap_to_steps(design, cfg_.dt);
  const long population = cfg_.population;
  long susceptible = population - 1, infected = 1, recovered = 0;
  SimOutcome out;
  out.values.resize(3 * steps.size());
  std::size_t rec = 0;
  auto record = [&](std::size_t k) {
    out.values[3 * k] = susceptible;
    out.values[3 * k + 1] = infected;
    out.values[3 * k + 2] = recovered;
  };
  while (rec < steps.size() && steps[rec] == 0) record(rec++);
  long step = 0;
  while (rec < steps.size()) {
    if (infected == 0) {
      // Extinct: state frozen for all remaining measurement times.
      for (; rec < steps.size(); ++rec) record(rec);
      break;
    }
    if (susceptible == 0) {
      // Recovery-only phase: aggregate the remaining per-step Bin(I, gamma)
      // transitions into one exact block draw per recording interval.
      const long span = steps[rec] - step;
      const double p = -std::expm1(static_cast<double>(span) * std::log1p(-gamma));
      const long dR = rng.binomial(infected, p);
      infected -= dR;
      recovered += dR;
      step = steps[rec];
      record(rec++);
      continue;
    }
    const double p_inf = beta * static_cast<double>(infected) / static_cast<double>(population);
    const long dI = rng.binomial(susceptible, p_inf);
    const long dR = rng.binomial(infected, gamma);
    susceptible -= dI;
    infected += dI - dR;
    recovered += dR;
    ++step;
    while (rec < steps.size() && steps[rec] == step) record(rec++);
  }
  return out;
}

double death_log_likelihood(double b, const DesignPoint& design, const SimOutcome& outcome,
                            const DeathConfig& cfg) {
  if (b < 0.0) throw std::invalid_argument("death_log_likelihood: b must be non-negative");
  if (outcome.values.size() != design.dim()) {
    throw std::invalid_argument("death_log_likelihood: outcome/design dimension mismatch");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const long population = cfg.population;
  double log_lik = 0.0;
  long s_prev = population - cfg.initial_infected;
  double tau_prev = 0.0;
  for (std::size_t k = 0; k < design.dim(); ++k) {
    const long s = population - outcome.values[k];
    if (s < 0 || s > s_prev) return kNegInf;  // inconsistent data gets zero likelihood
    const double dtau = design.times[k] - tau_prev;
    const double log_q = -b * dtau;
    if (log_q == 0.0) {
      if (s != s_prev) return kNegInf;
    } else {
      log_lik += log_binomial_coef(s_prev, s) + static_cast<double>(s) * log_q;
      if (s_prev - s > 0) {
        log_lik += static_cast<double>(s_prev - s) * std::log(-std::expm1(log_q));
      }
    }
    s_prev = s;
    tau_prev = design.times[k];
  }
  return log_lik;
}

}  // namespace bed
