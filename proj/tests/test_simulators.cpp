#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bed/numeric.hpp"
#include "bed/simulators.hpp"
#include "support.hpp"

using namespace bed;

namespace {
const DeathConfig kDeath{50, 0.01, 0};
const SirConfig kSir{50, 0.01};

std::vector<double> marginal_death_pmf(double b, double tau, long population) {
  // I(tau) ~ Bin(N, 1 - e^(-b tau)) exactly (per-individual exponential clocks).
  const double p = -std::expm1(-b * tau);
  std::vector<double> probs(population + 1);
  for (long k = 0; k <= population; ++k) {
    probs[k] = std::exp(log_binomial_coef(population, k) + k * std::log(p) +
                        (population - k) * std::log1p(-p));
  }
  return probs;
}
}  // namespace

TEST_CASE("death_infection_prob closed form and argument validation") {
  CHECK(death_infection_prob(2.3, 0.0) == 0.0);
  CHECK(death_infection_prob(0.0, 3.0) == 0.0);
  CHECK(death_infection_prob(1.5, 0.01) == doctest::Approx(0.014888060396937339).epsilon(1e-12));
  CHECK_THROWS_AS(death_infection_prob(-0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(death_infection_prob(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("simulate_death trivial rates") {
  const DeathModel model(kDeath);
  RngStream rng(3);
  const DesignPoint d{{0.5, 1.0, 2.0}};
  const auto zero = model.simulate({0.0}, d, rng);
  CHECK(zero.values == std::vector<long>{0, 0, 0});

  // b = 1000: everyone infected by tau = 4 with overwhelming probability
  for (int rep = 0; rep < 20; ++rep) {
    const auto full = model.simulate({1000.0}, DesignPoint{{4.0}}, rng);
    CHECK(full.values[0] == 50);
  }
}

TEST_CASE("simulate_death matches the closed-form marginal mean") {
  const DeathModel model(kDeath);
  RngStream rng(17);
  const std::size_t reps = 100000;
  double acc = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream sub = rng.derive(i);
    acc += static_cast<double>(model.simulate({1.5}, DesignPoint{{1.0}}, sub).values[0]);
  }
  const double p = 1.0 - std::exp(-1.5);
  const double expect = 50.0 * p;
  const double se = std::sqrt(50.0 * p * (1.0 - p) / static_cast<double>(reps));
  CHECK(std::abs(acc / static_cast<double>(reps) - expect) < 3.0 * se);
}

TEST_CASE("simulate_death agrees with the per-step brute-force oracle") {
  const DeathModel model(kDeath);
  RngStream rng(29);
  const DesignPoint d{{0.3, 1.1}};
  const std::size_t reps = 40000;
  double fast0 = 0.0, fast1 = 0.0, slow0 = 0.0, slow1 = 0.0, slow_sq0 = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream sub_fast = rng.derive(2 * i);
    RngStream sub_slow = rng.derive(2 * i + 1);
    const auto f = model.simulate({0.9}, d, sub_fast);
    const auto s = testsupport::naive_death(0.9, d, kDeath, sub_slow);
    fast0 += f.values[0];
    fast1 += f.values[1];
    slow0 += s.values[0];
    slow1 += s.values[1];
    slow_sq0 += static_cast<double>(s.values[0]) * static_cast<double>(s.values[0]);
  }
  const double n = static_cast<double>(reps);
  const double var0 = slow_sq0 / n - (slow0 / n) * (slow0 / n);
  const double se0 = std::sqrt(2.0 * var0 / n);  // two-sample mean comparison
  CHECK(std::abs(fast0 / n - slow0 / n) < 3.0 * se0);
  CHECK(std::abs(fast1 / n - slow1 / n) < 3.0 * se0 * 1.5);
}

TEST_CASE("death infections are monotone and bounded for any seed") {
  const DeathModel model(kDeath);
  const DesignPoint d{{0.2, 0.7, 1.3, 2.0, 3.5}};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed);
    const auto y = model.simulate({1.1}, d, rng);
    long prev = 0;
    for (long v : y.values) {
      CHECK(v >= prev);
      CHECK(v <= 50);
      prev = v;
    }
  }
}

TEST_CASE("death chi-square goodness of fit against the closed-form marginal") {
  const DeathModel model(kDeath);
  const long draws = 200000;
  for (double b : {0.5, 1.5}) {
    for (double tau : {0.5, 2.0}) {
      RngStream rng(static_cast<std::uint64_t>(b * 1000 + tau * 10));
      std::vector<long> counts(51, 0);
      for (long i = 0; i < draws; ++i) {
        RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
        counts[model.simulate({b}, DesignPoint{{tau}}, sub).values[0]]++;
      }
      const auto probs = marginal_death_pmf(b, tau, 50);
      CHECK(testsupport::chi2_gof_pvalue(counts, probs, draws) > 1e-3);
    }
  }
}

TEST_CASE("simulate_sir trivial parameter corners") {
  const SirModel model(kSir);
  RngStream rng(5);
  const DesignPoint d{{0.1, 0.5, 1.7}};
  const auto frozen = model.simulate({0.0, 0.0}, d, rng);
  CHECK(frozen.values == std::vector<long>{49, 1, 0, 49, 1, 0, 49, 1, 0});

  const auto instant = model.simulate({0.0, 1.0}, d, rng);
  CHECK(instant.values == std::vector<long>{49, 0, 1, 49, 0, 1, 49, 0, 1});
}

TEST_CASE("sir conservation and monotonicity over many trajectories") {
  const SirModel model(kSir);
  const DesignPoint d{{0.3, 0.8, 1.5, 3.0}};
  RngStream rng(31);
  for (int traj = 0; traj < 10000; ++traj) {
    RngStream sub = rng.derive(traj);
    RngStream theta_rng = rng.derive(traj + 1000000);
    const double beta = theta_rng.uniform(0.0, 0.5);
    const double gamma = theta_rng.uniform(0.0, 0.5);
    const auto y = model.simulate({beta, gamma}, d, sub);
    long prev_s = 50, prev_r = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const long s = y.values[3 * k], i = y.values[3 * k + 1], r = y.values[3 * k + 2];
      CHECK(s + i + r == 50);
      CHECK(s <= prev_s);
      CHECK(r >= prev_r);
      CHECK(i >= 0);
      prev_s = s;
      prev_r = r;
    }
  }
}

TEST_CASE("simulate_sir matches the brute-force scalar-loop oracle") {
  const SirModel model(kSir);
  const DesignPoint d{{0.5}};
  RngStream rng(41);
  const std::size_t reps = 100000;
  double fast[3] = {0, 0, 0}, slow[3] = {0, 0, 0}, slow_sq[3] = {0, 0, 0};
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream sub_fast = rng.derive(2 * i);
    RngStream sub_slow = rng.derive(2 * i + 1);
    const auto f = model.simulate({0.15, 0.05}, d, sub_fast);
    const auto s = testsupport::naive_sir(0.15, 0.05, d, kSir, sub_slow);
    for (int c = 0; c < 3; ++c) {
      fast[c] += f.values[c];
      slow[c] += s.values[c];
      slow_sq[c] += static_cast<double>(s.values[c]) * static_cast<double>(s.values[c]);
    }
  }
  const double n = static_cast<double>(reps);
  for (int c = 0; c < 3; ++c) {
    const double var = slow_sq[c] / n - (slow[c] / n) * (slow[c] / n);
    const double se = std::sqrt(2.0 * var / n);
    CHECK(std::abs(fast[c] / n - slow[c] / n) < 3.0 * se);
  }
}

TEST_CASE("death log likelihood closed-form anchors") {
  // n=1, I(tau)=0: log L = -N b tau
  const SimOutcome none{{0L}};
  const DesignPoint d{{0.7}};
  CHECK(death_log_likelihood(1.2, d, none, kDeath) ==
        doctest::Approx(-50.0 * 1.2 * 0.7).epsilon(1e-12));
  CHECK(death_log_likelihood(0.0, d, none, kDeath) == 0.0);

  // inconsistent data composes to zero likelihood, not an exception
  const SimOutcome decreasing{{10, 5}};
  CHECK(death_log_likelihood(1.0, DesignPoint{{0.5, 1.0}}, decreasing, kDeath) ==
        -std::numeric_limits<double>::infinity());
  const SimOutcome overflow{{51}};
  CHECK(death_log_likelihood(1.0, d, overflow, kDeath) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("death likelihood normalises over single-observation outcomes") {
  for (double b : {0.3, 1.5, 4.0}) {
    for (double tau : {0.2, 1.0, 3.7}) {
      double mass = 0.0;
      for (long i = 0; i <= 50; ++i) {
        mass += std::exp(death_log_likelihood(b, DesignPoint{{tau}}, SimOutcome{{i}}, kDeath));
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("death likelihood normalises over two-observation outcomes") {
  const DesignPoint d{{0.6, 1.4}};
  double mass = 0.0;
  for (long i1 = 0; i1 <= 50; ++i1) {
    for (long i2 = i1; i2 <= 50; ++i2) {
      mass += std::exp(death_log_likelihood(1.1, d, SimOutcome{{i1, i2}}, kDeath));
    }
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("simulator frequencies match exp(log likelihood) within multinomial bands") {
  const DeathModel model(kDeath);
  const DesignPoint d{{1.0}};
  const long draws = 1000000;
  RngStream rng(57);
  std::vector<long> counts(51, 0);
  for (long i = 0; i < draws; ++i) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
    counts[model.simulate({1.5}, d, sub).values[0]]++;
  }
  for (long k = 0; k <= 50; ++k) {
    const double p = std::exp(death_log_likelihood(1.5, d, SimOutcome{{k}}, kDeath));
    if (p < 1e-5) continue;  // skip cells where 3-sigma bands are vacuous
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    CHECK(std::abs(static_cast<double>(counts[k]) / static_cast<double>(draws) - p) <=
          3.5 * se);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(DeathModel(DeathConfig{0, 0.01, 0}), std::invalid_argument);
  CHECK_THROWS_AS(DeathModel(DeathConfig{50, 0.0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(DeathModel(DeathConfig{50, 0.01, 51}), std::invalid_argument);
  CHECK_THROWS_AS(SirModel(SirConfig{1, 0.01}), std::invalid_argument);

  const DeathModel death(kDeath);
  RngStream rng(1);
  CHECK_THROWS_AS(death.simulate({-1.0}, DesignPoint{{1.0}}, rng), std::invalid_argument);
  const SirModel sir(kSir);
  CHECK_THROWS_AS(sir.simulate({1.5, 0.1}, DesignPoint{{1.0}}, rng), std::invalid_argument);
  CHECK_THROWS_AS(sir.simulate({0.1}, DesignPoint{{1.0}}, rng), std::invalid_argument);
}
