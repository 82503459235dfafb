#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "critlab/rng.hpp"

namespace critlab {

// One realisation of a branching avalanche. `size` counts every individual
// including the seeding one, `duration` counts non-empty generations (the
// seed alone gives duration 1). Capped runs report size == size_cap with
// individuals still alive.
struct AvalancheRecord {
  std::uint64_t size = 1;
  std::int64_t duration = 1;
  bool capped = false;
};

// Offspring law with configurable tail. The heavy-tailed variant is
// P(n) ~ (n + c)^(-1-alpha) on n >= 0 with the shift c tuned so the mean
// comes out exactly as requested; 1 < alpha <= 2 keeps the mean finite
// while the variance diverges.
class OffspringDistribution {
 public:
  enum class Kind { poisson, bernoulli_pair, zeta_tail };

  static OffspringDistribution poisson(double mean);

  // Offspring 0 or 2, P(2) = mean / 2; requires mean <= 2.
  static OffspringDistribution bernoulli_pair(double mean);

  static OffspringDistribution zeta_tail(double mean, double alpha);

  Kind kind() const { return kind_; }
  double mean() const { return mean_; }
  double alpha() const { return alpha_; }
  // Tail shift c of the heavy-tailed law (exposed for cross-checks).
  double shift() const { return shift_; }

  std::uint64_t sample(RngStream& rng) const;

  // Total offspring of `parents` individuals in one generation. For the
  // Poisson kind this is a single aggregated draw, which keeps
  // near-critical capped runs cheap; the other kinds loop per parent.
  std::uint64_t sample_generation(std::uint64_t parents, RngStream& rng) const;

 private:
  OffspringDistribution() = default;

  std::uint64_t sample_zeta(RngStream& rng) const;

  Kind kind_ = Kind::poisson;
  double mean_ = 0.0;
  double alpha_ = 0.0;
  double shift_ = 0.0;
  double knuth_limit_ = 0.0;       // exp(-mean), Poisson below the PTRS regime
  std::vector<double> zeta_cum_;   // cumulative pmf over 0..table-1
  double tail_exponent_ = 0.0;     // alpha, cached for the tail sampler
  double tail_ratio_max_ = 0.0;    // rejection bound at the table boundary
};

// Hurwitz zeta sum_{k>=0} (k + c)^(-s) for s > 1, c > 0 (Euler-Maclaurin);
// used to normalise the heavy-tailed offspring law and exposed for tests.
double hurwitz_zeta(double s, double c);

// Single avalanche seeded by one individual, generation-synchronous, O(1)
// memory in the avalanche size.
AvalancheRecord run_avalanche(const OffspringDistribution& offspring,
                              std::uint64_t size_cap, RngStream& rng);

// Fraction of capped runs; with a generous cap this estimates the survival
// probability of the supercritical process.
double survival_probability(const OffspringDistribution& offspring,
                            std::int64_t n_runs, std::uint64_t size_cap,
                            RngStream& rng);

std::vector<AvalancheRecord> avalanche_ensemble(
    const OffspringDistribution& offspring, std::int64_t n_runs,
    std::uint64_t size_cap, RngStream& rng);

// CSV "size,duration,capped" with capped as 0/1.
std::string to_csv(const std::vector<AvalancheRecord>& records);
void write_csv(const std::vector<AvalancheRecord>& records,
               const std::string& path);

}  // namespace critlab
