#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "critlab/analysis.hpp"
#include "critlab/branching.hpp"
#include "critlab/rng.hpp"

using critlab::AvalancheRecord;
using critlab::hurwitz_zeta;
using critlab::OffspringDistribution;
using critlab::RngStream;
using critlab::run_avalanche;

TEST_CASE("generalised zeta matches closed forms") {
  double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(hurwitz_zeta(2.0, 1.0) == doctest::Approx(pi2 / 6.0).epsilon(1e-12));
  CHECK(hurwitz_zeta(2.0, 0.5) == doctest::Approx(pi2 / 2.0).epsilon(1e-12));
  CHECK(hurwitz_zeta(3.0, 1.0) ==
        doctest::Approx(1.2020569031595943).epsilon(1e-12));
  CHECK(hurwitz_zeta(4.0, 1.0) ==
        doctest::Approx(pi2 * pi2 / 90.0).epsilon(1e-12));

  // Slowly converging case against a long direct sum with an integral tail.
  double s = 1.7, c = 0.83;
  double direct = 0.0;
  int n = 20000;
  for (int k = 0; k < n; ++k) direct += std::pow(k + c, -s);
  double v = n + c;
  direct += std::pow(v, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(v, -s);
  CHECK(hurwitz_zeta(s, c) == doctest::Approx(direct).epsilon(1e-10));

  CHECK_THROWS_AS(hurwitz_zeta(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), std::invalid_argument);
}

TEST_CASE("heavy-tailed offspring law has the requested mean and pmf") {
  struct Case {
    double mean, alpha;
  };
  int case_index = 0;
  for (auto [mean, alpha] : {Case{1.0, 1.5}, Case{0.7, 2.0}, Case{1.5, 1.2}}) {
    CAPTURE(mean);
    CAPTURE(alpha);
    auto law = OffspringDistribution::zeta_tail(mean, alpha);
    double c = law.shift();
    REQUIRE(c > 0.0);
    double z = hurwitz_zeta(1.0 + alpha, c);

    // The tuned shift must satisfy the mean identity exactly.
    CHECK(hurwitz_zeta(alpha, c) / z - c == doctest::Approx(mean).epsilon(1e-9));

    const int n_draws = 200000;
    RngStream rng(21, static_cast<std::uint64_t>(case_index++));
    std::vector<std::uint64_t> draws(n_draws);
    for (auto& d : draws) d = law.sample(rng);

    // Head pmf at a few points, 4-sigma binomial tolerances.
    for (std::uint64_t k : {0, 1, 2, 7}) {
      double p = std::pow(static_cast<double>(k) + c, -1.0 - alpha) / z;
      double hits = 0.0;
      for (auto d : draws) hits += (d == k) ? 1.0 : 0.0;
      double tol = 4.0 * std::sqrt(p * (1.0 - p) / n_draws);
      CHECK(std::abs(hits / n_draws - p) < tol);
    }

    // Tail mass beyond the sampling table boundary and one octave further.
    for (double edge : {64.0, 128.0}) {
      double p = hurwitz_zeta(1.0 + alpha, edge + c) / z;
      double hits = 0.0;
      for (auto d : draws) hits += (static_cast<double>(d) >= edge) ? 1.0 : 0.0;
      double tol = 4.0 * std::sqrt(p * (1.0 - p) / n_draws);
      CHECK(std::abs(hits / n_draws - p) < tol);
    }

    // Truncated mean E[min(n, 256)] against a direct sum, at 4 sigma using
    // the truncated second moment for the spread.
    double cap = 256.0;
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < 256; ++k) {
      double p = std::pow(k + c, -1.0 - alpha) / z;
      m1 += k * p;
      m2 += static_cast<double>(k) * k * p;
    }
    double tail = hurwitz_zeta(1.0 + alpha, cap + c) / z;
    m1 += cap * tail;
    m2 += cap * cap * tail;
    double sample_mean = 0.0;
    for (auto d : draws) sample_mean += std::min(static_cast<double>(d), cap);
    sample_mean /= n_draws;
    double tol = 4.0 * std::sqrt((m2 - m1 * m1) / n_draws);
    CHECK(std::abs(sample_mean - m1) < tol);
  }
}

TEST_CASE("degenerate heavy-tailed law with zero mean never branches") {
  auto law = OffspringDistribution::zeta_tail(0.0, 1.5);
  RngStream rng(22, 0);
  for (int i = 0; i < 100; ++i) CHECK(law.sample(rng) == 0);
  auto rec = run_avalanche(law, 1000, rng);
  CHECK(rec.size == 1);
  CHECK(rec.duration == 1);
  CHECK(!rec.capped);
}

TEST_CASE("subcritical mean avalanche size is 1 / (1 - R0)") {
  // Var(S) = sigma_offspring^2 / (1 - R0)^3 gives the tolerance scale.
  RngStream rng(23, 0);
  const std::int64_t runs = 200000;

  auto poisson = OffspringDistribution::poisson(0.8);
  double mean = 0.0;
  for (std::int64_t i = 0; i < runs; ++i)
    mean += static_cast<double>(run_avalanche(poisson, 1u << 30, rng).size);
  mean /= static_cast<double>(runs);
  double se = std::sqrt(0.8 / std::pow(0.2, 3) / static_cast<double>(runs));
  CHECK(std::abs(mean - 5.0) < 4.0 * se);

  auto pair = OffspringDistribution::bernoulli_pair(0.8);
  mean = 0.0;
  for (std::int64_t i = 0; i < runs; ++i)
    mean += static_cast<double>(run_avalanche(pair, 1u << 30, rng).size);
  mean /= static_cast<double>(runs);
  // offspring variance 4 * 0.4 - 0.64 = 0.96
  se = std::sqrt(0.96 / std::pow(0.2, 3) / static_cast<double>(runs));
  CHECK(std::abs(mean - 5.0) < 4.0 * se);

  // Infinite offspring variance: the sample mean still converges to 2 for
  // R0 = 0.5, just slowly, so the window is wide.
  auto heavy = OffspringDistribution::zeta_tail(0.5, 1.5);
  mean = 0.0;
  for (std::int64_t i = 0; i < 100000; ++i)
    mean += static_cast<double>(run_avalanche(heavy, 1u << 30, rng).size);
  mean /= 100000.0;
  CHECK(std::abs(mean - 2.0) < 0.2);
}

TEST_CASE("supercritical survival matches the generating-function fixed point") {
  // Poisson offspring: phi solves phi = 1 - exp(-R0 phi).
  double phi = 0.5;
  for (int i = 0; i < 200; ++i) phi = 1.0 - std::exp(-1.5 * phi);
  CHECK(phi == doctest::Approx(0.5828).epsilon(1e-3));

  RngStream rng(24, 0);
  auto poisson = OffspringDistribution::poisson(1.5);
  double hat = critlab::survival_probability(poisson, 40000, 100000, rng);
  CHECK(std::abs(hat - phi) < 0.01);

  // Offspring 0 or 2: extinction solves q = (1 - p) + p q^2, so
  // phi = 2 - 2 / R0.
  auto pair = OffspringDistribution::bernoulli_pair(1.5);
  double hat_pair = critlab::survival_probability(pair, 10000, 20000, rng);
  CHECK(std::abs(hat_pair - 2.0 / 3.0) < 0.02);

  // Every individual always has two children: nothing ever dies.
  auto sure = OffspringDistribution::bernoulli_pair(2.0);
  CHECK(critlab::survival_probability(sure, 200, 1000, rng) == 1.0);

  // No offspring at all: nothing ever survives.
  auto barren = OffspringDistribution::poisson(0.0);
  CHECK(critlab::survival_probability(barren, 200, 1000, rng) == 0.0);
}

TEST_CASE("critical avalanche sizes follow the 3/2 power law") {
  RngStream rng(25, 0);
  auto law = OffspringDistribution::poisson(1.0);
  auto records = critlab::avalanche_ensemble(law, 100000, 1000000, rng);
  std::vector<double> sizes;
  sizes.reserve(records.size());
  for (const auto& r : records) sizes.push_back(static_cast<double>(r.size));
  auto fit = critlab::fit_power_law(sizes, 30.0, 30000.0);
  CHECK(fit.n_tail > 5000);
  CHECK(fit.exponent == doctest::Approx(1.5).epsilon(0.08));

  for (const auto& r : records) {
    CHECK(r.duration >= 1);
    if (r.size == 1) CHECK(r.duration == 1);
    CHECK(r.capped == (r.size == 1000000));
  }
}

TEST_CASE("capped runs stop at exactly the cap") {
  RngStream rng(26, 0);
  auto law = OffspringDistribution::poisson(3.0);
  int capped = 0;
  for (int i = 0; i < 200; ++i) {
    auto rec = run_avalanche(law, 1000, rng);
    CHECK(rec.capped == (rec.size == 1000));
    CHECK(rec.size <= 1000);
    capped += rec.capped ? 1 : 0;
  }
  CHECK(capped > 150);  // survival at R0 = 3 is about 0.94

  auto rec = run_avalanche(law, 1, rng);
  CHECK(rec.capped);
  CHECK(rec.size == 1);
}

TEST_CASE("ensembles are reproducible from the stream coordinates") {
  auto law = OffspringDistribution::zeta_tail(1.0, 1.5);
  RngStream a(11, 3), b(11, 3), other(11, 4);
  auto ra = critlab::avalanche_ensemble(law, 2000, 100000, a);
  auto rb = critlab::avalanche_ensemble(law, 2000, 100000, b);
  auto rc = critlab::avalanche_ensemble(law, 2000, 100000, other);
  CHECK(critlab::to_csv(ra) == critlab::to_csv(rb));
  CHECK(critlab::to_csv(ra) != critlab::to_csv(rc));
}

TEST_CASE("avalanche CSV layout") {
  std::vector<AvalancheRecord> recs = {
      {1, 1, false}, {5, 3, false}, {1000, 12, true}};
  CHECK(critlab::to_csv(recs) ==
        "size,duration,capped\n1,1,0\n5,3,0\n1000,12,1\n");
}

TEST_CASE("offspring parameter guards") {
  CHECK_THROWS_AS(OffspringDistribution::poisson(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(OffspringDistribution::bernoulli_pair(2.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(OffspringDistribution::bernoulli_pair(-0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(OffspringDistribution::zeta_tail(1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(OffspringDistribution::zeta_tail(1.0, 2.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(OffspringDistribution::zeta_tail(-1.0, 1.5),
                  std::invalid_argument);

  auto law = OffspringDistribution::poisson(1.0);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(run_avalanche(law, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(critlab::survival_probability(law, 0, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::avalanche_ensemble(law, 0, 10, rng),
                  std::invalid_argument);
}
