#include "critlab/branching.hpp"

#include <cmath>
#include <stdexcept>

#include "critlab/csv.hpp"

namespace critlab {

namespace {

constexpr std::size_t kZetaTable = 64;

// Mean of the law P(n) ~ (n + c)^(-1-alpha): zeta(alpha,c)/zeta(1+alpha,c) - c.
double zeta_tail_mean(double alpha, double c) {
  return hurwitz_zeta(alpha, c) / hurwitz_zeta(1.0 + alpha, c) - c;
}

}  // namespace

double hurwitz_zeta(double s, double c) {
  if (s <= 1.0) throw std::invalid_argument("hurwitz_zeta: need s > 1");
  if (c <= 0.0) throw std::invalid_argument("hurwitz_zeta: need c > 0");
  constexpr int kCut = 32;
  double sum = 0.0;
  for (int k = 0; k < kCut; ++k) sum += std::pow(k + c, -s);
  double v = kCut + c;
  double vinv = 1.0 / v;
  double head = std::pow(v, -s);
  // Euler-Maclaurin correction: integral, half-term, and Bernoulli terms.
  sum += head * v / (s - 1.0) + 0.5 * head;
  double t = head * vinv * s;
  sum += t / 12.0;                                     // B2/2!
  t *= vinv * vinv * (s + 1.0) * (s + 2.0);
  sum -= t / 720.0;                                    // B4/4!
  t *= vinv * vinv * (s + 3.0) * (s + 4.0);
  sum += t / 30240.0;                                  // B6/6!
  return sum;
}

OffspringDistribution OffspringDistribution::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw std::invalid_argument("offspring: mean must be finite and >= 0");
  OffspringDistribution d;
  d.kind_ = Kind::poisson;
  d.mean_ = mean;
  d.knuth_limit_ = std::exp(-mean);
  return d;
}

OffspringDistribution OffspringDistribution::bernoulli_pair(double mean) {
  if (mean < 0.0 || mean > 2.0)
    throw std::invalid_argument("offspring: bernoulli-pair mean must lie in [0, 2]");
  OffspringDistribution d;
  d.kind_ = Kind::bernoulli_pair;
  d.mean_ = mean;
  return d;
}

OffspringDistribution OffspringDistribution::zeta_tail(double mean, double alpha) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw std::invalid_argument("offspring: mean must be finite and >= 0");
  if (!(alpha > 1.0) || !(alpha <= 2.0))
    throw std::invalid_argument("offspring: zeta-tail needs 1 < alpha <= 2");
  OffspringDistribution d;
  d.kind_ = Kind::zeta_tail;
  d.mean_ = mean;
  d.alpha_ = alpha;
  d.tail_exponent_ = alpha;
  if (mean == 0.0) return d;  // degenerate: all offspring counts are zero

  // Tune the shift so the mean matches: the mean is monotone increasing in
  // the shift, so plain bisection is reliable.
  double lo = 1e-12, hi = 1.0;
  while (zeta_tail_mean(alpha, hi) < mean) {
    hi *= 2.0;
    if (hi > 1e12)
      throw std::invalid_argument("offspring: zeta-tail mean out of reach");
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (zeta_tail_mean(alpha, mid) < mean ? lo : hi) = mid;
  }
  double c = 0.5 * (lo + hi);
  d.shift_ = c;

  double z = hurwitz_zeta(1.0 + alpha, c);
  d.zeta_cum_.resize(kZetaTable);
  double cum = 0.0;
  for (std::size_t n = 0; n < kZetaTable; ++n) {
    cum += std::pow(static_cast<double>(n) + c, -1.0 - alpha) / z;
    d.zeta_cum_[n] = cum;
  }
  // Rejection bound for the tail sampler: the pmf-to-proposal ratio
  // v^(-1-a) / (v^-a - (v+1)^-a) is decreasing in v, so its value at the
  // table boundary dominates.
  double v = static_cast<double>(kZetaTable) + c;
  d.tail_ratio_max_ = std::pow(v, -1.0 - alpha) /
                      (std::pow(v, -alpha) - std::pow(v + 1.0, -alpha));
  return d;
}

std::uint64_t OffspringDistribution::sample_zeta(RngStream& rng) const {
  if (mean_ == 0.0) return 0;
  double u = rng.uniform();
  if (u < zeta_cum_.back()) {
    // Chop-down over the table; the mean is order one, so this usually
    // terminates within the first few entries.
    std::size_t n = 0;
    while (u >= zeta_cum_[n]) ++n;
    return n;
  }
  // Tail beyond the table: sample a continuous Pareto proposal, floor it,
  // and accept against the exact pmf.
  double alpha = tail_exponent_;
  double base = static_cast<double>(kZetaTable) + shift_;
  for (;;) {
    double y = base * std::pow(rng.uniform(), -1.0 / alpha) - shift_;
    double nf = std::floor(y);
    double v = nf + shift_;
    double ratio = std::pow(v, -1.0 - alpha) /
                   (std::pow(v, -alpha) - std::pow(v + 1.0, -alpha));
    if (rng.uniform() * tail_ratio_max_ <= ratio)
      return static_cast<std::uint64_t>(nf);
  }
}

std::uint64_t OffspringDistribution::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::poisson: {
      if (mean_ < 10.0) {
        std::uint64_t k = 0;
        double p = rng.uniform();
        while (p > knuth_limit_) {
          ++k;
          p *= rng.uniform();
        }
        return k;
      }
      return rng.poisson(mean_);
    }
    case Kind::bernoulli_pair:
      return rng.uniform() < 0.5 * mean_ ? 2 : 0;
    case Kind::zeta_tail:
      return sample_zeta(rng);
  }
  return 0;
}

std::uint64_t OffspringDistribution::sample_generation(std::uint64_t parents,
                                                       RngStream& rng) const {
  if (parents == 0) return 0;
  if (kind_ == Kind::poisson)
    return rng.poisson(static_cast<double>(parents) * mean_);
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < parents; ++i) total += sample(rng);
  return total;
}

AvalancheRecord run_avalanche(const OffspringDistribution& offspring,
                              std::uint64_t size_cap, RngStream& rng) {
  if (size_cap < 1) throw std::invalid_argument("run_avalanche: size_cap must be >= 1");
  AvalancheRecord rec;
  if (rec.size >= size_cap) {
    rec.size = size_cap;
    rec.capped = true;
    return rec;
  }
  std::uint64_t live = 1;
  for (;;) {
    std::uint64_t next = offspring.sample_generation(live, rng);
    if (next == 0) break;
    rec.duration += 1;
    if (next >= size_cap - rec.size) {
      rec.size = size_cap;
      rec.capped = true;
      break;
    }
    rec.size += next;
    live = next;
  }
  return rec;
}

double survival_probability(const OffspringDistribution& offspring,
                            std::int64_t n_runs, std::uint64_t size_cap,
                            RngStream& rng) {
  if (n_runs < 1) throw std::invalid_argument("survival_probability: n_runs must be >= 1");
  std::int64_t capped = 0;
  for (std::int64_t i = 0; i < n_runs; ++i)
    capped += run_avalanche(offspring, size_cap, rng).capped ? 1 : 0;
  return static_cast<double>(capped) / static_cast<double>(n_runs);
}

std::vector<AvalancheRecord> avalanche_ensemble(
    const OffspringDistribution& offspring, std::int64_t n_runs,
    std::uint64_t size_cap, RngStream& rng) {
  if (n_runs < 1) throw std::invalid_argument("avalanche_ensemble: n_runs must be >= 1");
  std::vector<AvalancheRecord> records;
  records.reserve(static_cast<std::size_t>(n_runs));
  for (std::int64_t i = 0; i < n_runs; ++i)
    records.push_back(run_avalanche(offspring, size_cap, rng));
  return records;
}

std::string to_csv(const std::vector<AvalancheRecord>& records) {
  std::string out = "size,duration,capped\n";
  out.reserve(out.size() + records.size() * 16);
  for (const auto& r : records) {
    append_u64(out, r.size);
    out += ',';
    append_i64(out, r.duration);
    out += ',';
    out += r.capped ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<AvalancheRecord>& records,
               const std::string& path) {
  write_text_file(path, to_csv(records));
}

}  // namespace critlab
