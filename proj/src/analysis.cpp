#include "critlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "critlab/csv.hpp"

namespace critlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// KS distance of sorted tail data against the continuous power law with the
// given exponent on [x_min, x_max].
double power_law_ks(const std::vector<double>& tail, double exponent,
                    double x_min, double x_max) {
  double e1 = 1.0 - exponent;
  double lo = std::pow(x_min, e1);
  double hi = std::isfinite(x_max) ? std::pow(x_max, e1) : 0.0;
  double span = lo - hi;
  double n = static_cast<double>(tail.size());
  double d = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    double f = (lo - std::pow(tail[i], e1)) / span;
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double power_law_loglik(const std::vector<double>& tail, double exponent,
                        double x_min, double x_max) {
  double n = static_cast<double>(tail.size());
  double sum_log = 0.0;
  for (double x : tail) sum_log += std::log(x / x_min);
  double log_norm = std::log(exponent - 1.0) - std::log(x_min);
  if (std::isfinite(x_max))
    log_norm -= std::log1p(-std::pow(x_max / x_min, 1.0 - exponent));
  return n * log_norm - exponent * sum_log;
}

double exponential_loglik(const std::vector<double>& tail, double x_min,
                          double x_max) {
  double mean_excess = 0.0;
  for (double x : tail) mean_excess += x - x_min;
  mean_excess /= static_cast<double>(tail.size());
  if (mean_excess <= 0.0) return -std::numeric_limits<double>::infinity();
  double n = static_cast<double>(tail.size());
  double ll = -n * std::log(mean_excess) - n;
  if (std::isfinite(x_max))
    ll -= n * std::log1p(-std::exp(-(x_max - x_min) / mean_excess));
  return ll;
}

// Truncated-Pareto MLE: the likelihood is unimodal in the exponent, so the
// stationarity condition can be bisected.
double truncated_mle(const std::vector<double>& tail, double x_min, double x_max) {
  double mean_log = 0.0;
  for (double x : tail) mean_log += std::log(x / x_min);
  mean_log /= static_cast<double>(tail.size());
  double log_r = std::log(x_max / x_min);

  auto score = [&](double a) {
    double r1a = std::pow(x_max / x_min, 1.0 - a);
    return 1.0 / (a - 1.0) - log_r * r1a / (1.0 - r1a) - mean_log;
  };

  double lo = 1.0 + 1e-9, hi = 2.0;
  while (score(hi) > 0.0 && hi < 1e6) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TailFit fit_tail(std::vector<double> tail, double x_min, double x_max) {
  TailFit fit;
  fit.x_min = x_min;
  fit.x_max = x_max;
  fit.n_tail = tail.size();
  std::sort(tail.begin(), tail.end());
  if (tail.front() == tail.back())
    throw std::invalid_argument("fit_power_law: tail samples are degenerate");

  if (std::isfinite(x_max)) {
    fit.exponent = truncated_mle(tail, x_min, x_max);
  } else {
    double sum_log = 0.0;
    for (double x : tail) sum_log += std::log(x / x_min);
    if (sum_log <= 0.0)
      throw std::invalid_argument("fit_power_law: tail samples are degenerate");
    fit.exponent = 1.0 + static_cast<double>(tail.size()) / sum_log;
  }

  fit.ks_distance = power_law_ks(tail, fit.exponent, x_min, x_max);
  // Likelihood duel on the same tail: both laws with their own MLE scale.
  double ll_pl = power_law_loglik(tail, fit.exponent, x_min, x_max);
  double ll_exp = exponential_loglik(tail, x_min, x_max);
  fit.verdict =
      ll_exp > ll_pl ? TailVerdict::exponential : TailVerdict::power_law;
  return fit;
}

}  // namespace

std::string to_string(TailVerdict v) {
  return v == TailVerdict::power_law ? "power-law" : "exponential";
}

std::string to_json(const TailFit& fit) {
  std::string out = "{\n  \"exponent\": " + format_double(fit.exponent);
  out += ",\n  \"x_min\": " + format_double(fit.x_min);
  out += ",\n  \"x_max\": ";
  out += std::isfinite(fit.x_max) ? format_double(fit.x_max) : "null";
  out += ",\n  \"n_tail\": " + std::to_string(fit.n_tail);
  out += ",\n  \"ks_distance\": " + format_double(fit.ks_distance);
  out += ",\n  \"verdict\": \"" + to_string(fit.verdict) + "\"\n}";
  return out;
}

TailFit fit_power_law(const std::vector<double>& samples, double x_min,
                      double x_max) {
  if (x_min <= 0.0) throw std::invalid_argument("fit_power_law: x_min must be > 0");
  if (x_max == 0.0) x_max = kInf;
  if (x_max <= x_min)
    throw std::invalid_argument("fit_power_law: x_max must exceed x_min");

  std::vector<double> tail;
  for (double x : samples)
    if (x >= x_min && x <= x_max) tail.push_back(x);
  if (tail.size() < 10)
    throw std::invalid_argument("fit_power_law: fewer than 10 tail samples");
  return fit_tail(std::move(tail), x_min, x_max);
}

TailFit fit_power_law(const std::vector<double>& samples) {
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || sorted.front() <= 0.0)
    throw std::invalid_argument("fit_power_law: samples must be positive");
  if (sorted.front() == sorted.back())
    throw std::invalid_argument("fit_power_law: all samples equal");

  // Candidate cutoffs: log-spaced between the smallest sample and the 90th
  // percentile, constrained to leave at least 100 tail samples.
  double lo = sorted.front();
  double hi = sorted[static_cast<std::size_t>(0.9 * (sorted.size() - 1))];
  if (hi <= lo) hi = sorted.back();

  const int n_candidates = 64;
  TailFit best;
  bool found = false;
  double prev = -1.0;
  for (int i = 0; i < n_candidates; ++i) {
    double x_min =
        lo * std::pow(hi / lo, static_cast<double>(i) / (n_candidates - 1));
    if (x_min == prev) continue;
    prev = x_min;
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x_min);
    std::vector<double> tail(it, sorted.end());
    if (tail.size() < 100) break;
    if (tail.front() == tail.back()) continue;
    TailFit fit = fit_tail(std::move(tail), x_min, kInf);
    if (!found || fit.ks_distance < best.ks_distance) {
      best = fit;
      found = true;
    }
  }
  if (!found)
    throw std::invalid_argument(
        "fit_power_law: no cutoff leaves at least 100 tail samples");
  return best;
}

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
  const Eigen::Index n = series.size();
  if (max_lag < 0 || max_lag >= n)
    throw std::invalid_argument("autocorrelation: need 0 <= max_lag < length");
  Eigen::VectorXd centered = series.array() - series.mean();
  double var = centered.squaredNorm() / static_cast<double>(n);
  Eigen::VectorXd rho(max_lag + 1);
  if (var == 0.0) {
    rho.setOnes();
    return rho;
  }
  rho[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double prod = centered.head(n - k).dot(centered.tail(n - k)) /
                  static_cast<double>(n - k);
    rho[k] = prod / var;
  }
  return rho;
}

std::vector<HistogramBin> log_binned_histogram(const std::vector<double>& samples,
                                               int bins_per_decade) {
  if (samples.empty())
    throw std::invalid_argument("log_binned_histogram: empty sample");
  if (bins_per_decade < 1)
    throw std::invalid_argument("log_binned_histogram: bins_per_decade must be >= 1");
  double lo = kInf, hi = -kInf;
  for (double x : samples) {
    if (!(x > 0.0))
      throw std::invalid_argument("log_binned_histogram: samples must be > 0");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }

  double step = 1.0 / bins_per_decade;
  if (lo == hi) {
    // Degenerate sample: one symmetric bin around the common value.
    HistogramBin bin;
    bin.lo = lo * std::pow(10.0, -0.5 * step);
    bin.hi = lo * std::pow(10.0, 0.5 * step);
    bin.count = samples.size();
    bin.density = 1.0 / (bin.hi - bin.lo);
    return {bin};
  }

  double log_lo = std::log10(lo);
  int n_bins =
      static_cast<int>(std::floor((std::log10(hi) - log_lo) / step)) + 1;
  std::vector<HistogramBin> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].lo = std::pow(10.0, log_lo + b * step);
    bins[static_cast<std::size_t>(b)].hi = std::pow(10.0, log_lo + (b + 1) * step);
  }
  bins.front().lo = lo;  // guard against rounding at the anchor

  for (double x : samples) {
    int b = static_cast<int>(std::floor((std::log10(x) - log_lo) / step));
    b = std::clamp(b, 0, n_bins - 1);
    // Rounding can land a sample one bin off; nudge to the containing bin.
    while (b > 0 && x < bins[static_cast<std::size_t>(b)].lo) --b;
    while (b < n_bins - 1 && x >= bins[static_cast<std::size_t>(b)].hi) ++b;
    ++bins[static_cast<std::size_t>(b)].count;
  }
  double n = static_cast<double>(samples.size());
  for (auto& bin : bins)
    bin.density = static_cast<double>(bin.count) / (n * (bin.hi - bin.lo));
  return bins;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need two or more paired points");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are constant");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

LinearFit fit_line_through_origin(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("fit_line_through_origin: need paired points");
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  if (sxx == 0.0)
    throw std::invalid_argument("fit_line_through_origin: x values all zero");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - fit.slope * x[i];
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace critlab
