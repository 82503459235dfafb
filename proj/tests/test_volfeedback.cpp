#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "critlab/analysis.hpp"
#include "critlab/rng.hpp"
#include "critlab/volfeedback.hpp"

using critlab::autocorrelation;
using critlab::estimate_branching_ratio;
using critlab::EventSeries;
using critlab::exponential_kernel;
using critlab::FeedbackKernel;
using critlab::HawkesFit;
using critlab::ks_distance;
using critlab::power_law_kernel;
using critlab::RngStream;
using critlab::simulate_arch;
using critlab::simulate_hawkes;
using critlab::TimeSeries;

namespace {

// standard error of the mean by batch means, for correlated samples
double batch_se(const std::vector<double>& v, int n_batches) {
  int len = static_cast<int>(v.size()) / n_batches;
  std::vector<double> means(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (int i = 0; i < len; ++i) s += v[b * len + i];
    means[b] = s / len;
  }
  double mu = std::accumulate(means.begin(), means.end(), 0.0) / n_batches;
  double s2 = 0.0;
  for (double m : means) s2 += (m - mu) * (m - mu);
  return std::sqrt(s2 / (n_batches - 1) / n_batches);
}

// mean squared return against its stationary target, in batch SE units
double identity_deviation(double g, const FeedbackKernel& kernel,
                          std::uint64_t stream, double* mean_out = nullptr) {
  RngStream rng(102, stream);
  TimeSeries ts = simulate_arch(1.0, kernel, 1000000, rng);
  std::vector<double> sq(ts.rows());
  for (int t = 0; t < ts.rows(); ++t) sq[t] = ts.values(t, 0) * ts.values(t, 0);
  double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / sq.size();
  if (mean_out) *mean_out = mean;
  return (mean - 1.0 / (1.0 - g)) / batch_se(sq, 100);
}

// mean offspring count over parents old enough for a complete brood
double offspring_mean(const EventSeries& ev, double window) {
  std::vector<int> kids(ev.times.size(), 0);
  for (int p : ev.parent)
    if (p >= 0) ++kids[p];
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < ev.times.size(); ++i)
    if (ev.times[i] <= ev.t_max - window) {
      sum += kids[i];
      ++n;
    }
  REQUIRE(n > 1000);
  return sum / n;
}

double fano_factor(const EventSeries& ev, double window) {
  int n_windows = static_cast<int>(ev.t_max / window);
  std::vector<double> counts(n_windows, 0.0);
  for (double t : ev.times) {
    int b = std::min(static_cast<int>(t / window), n_windows - 1);
    counts[b] += 1.0;
  }
  double mu = std::accumulate(counts.begin(), counts.end(), 0.0) / n_windows;
  double s2 = 0.0;
  for (double c : counts) s2 += (c - mu) * (c - mu);
  return s2 / (n_windows - 1) / mu;
}

}  // namespace

TEST_CASE("kernel factories validate parameters") {
  CHECK_THROWS_AS(exponential_kernel(-0.1, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(exponential_kernel(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(power_law_kernel(0.5, 0.0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(power_law_kernel(0.5, 0.5, 0.5), std::invalid_argument);
  FeedbackKernel k = power_law_kernel(0.4, 0.3, 64.0);
  CHECK(k.kind == FeedbackKernel::Kind::power_law);
  CHECK(k.g == 0.4);
  CHECK(k.theta == 0.3);
  CHECK(k.tau_max == 64.0);
}

TEST_CASE("returns without feedback are plain gaussian noise") {
  RngStream rng(101, 0);
  FeedbackKernel k = exponential_kernel(0.0, 0.05);
  TimeSeries ts = simulate_arch(1.0, k, 100000, rng);
  CHECK(ts.rows() == 100000);
  CHECK(ts.labels == std::vector<std::string>{"r"});
  double m2 = ts.values.col(0).squaredNorm() / ts.rows();
  // var(r^2) = 2 for unit gaussian returns
  CHECK(std::abs(m2 - 1.0) < 3.0 * std::sqrt(2.0 / 100000.0));

  RngStream rng2(101, 0);
  TimeSeries ts2 = simulate_arch(1.0, k, 100000, rng2);
  CHECK(ts.values == ts2.values);
}

TEST_CASE("feedback amplifies the variance to sigma0^2/(1-g)") {
  double dev02 = identity_deviation(0.2, exponential_kernel(0.2, 0.05), 0);
  double dev05 = identity_deviation(0.5, exponential_kernel(0.5, 0.05), 1);
  double mean08 = 0.0;
  double dev08 =
      identity_deviation(0.8, exponential_kernel(0.8, 0.05), 2, &mean08);
  CHECK(std::abs(dev02) < 3.0);
  CHECK(std::abs(dev05) < 3.0);
  CHECK(std::abs(dev08) < 3.0);
  // amplification factor at g = 0.8 with unit base variance
  CHECK(mean08 > 4.5);
  CHECK(mean08 < 5.5);
}

TEST_CASE("power-law kernel obeys the same variance identity") {
  double dev = identity_deviation(0.5, power_law_kernel(0.5, 0.5, 512.0), 10);
  CHECK(std::abs(dev) < 3.0);
}

TEST_CASE("stronger feedback stretches the volatility memory") {
  auto integrated_time = [](double g, std::uint64_t stream) {
    RngStream rng(104, stream);
    TimeSeries ts = simulate_arch(1.0, exponential_kernel(g, 0.05), 400000, rng);
    Eigen::VectorXd sq = ts.values.col(0).array().square();
    Eigen::VectorXd rho = autocorrelation(sq, 2000);
    double integ = 0.0;
    for (int l = 1; l <= 2000; ++l) integ += rho(l);
    return integ;
  };
  double t_half = integrated_time(0.5, 0);
  double t_near = integrated_time(0.95, 1);
  CHECK(t_half > 0.0);
  CHECK(t_near / t_half > 3.0);
}

TEST_CASE("arch rejects non-stationary feedback") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(simulate_arch(1.0, exponential_kernel(1.0, 0.05), 100, rng),
                  std::range_error);
  CHECK_THROWS_AS(simulate_arch(0.0, exponential_kernel(0.5, 0.05), 100, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_arch(1.0, exponential_kernel(0.5, 0.05), 0, rng),
                  std::invalid_argument);
}

TEST_CASE("bare baseline is a poisson process") {
  RngStream rng(105, 0);
  EventSeries ev = simulate_hawkes(2.0, exponential_kernel(0.0, 0.1), 50000.0, rng);
  double rate = ev.times.size() / ev.t_max;
  CHECK(std::abs(rate - 2.0) < 3.0 * std::sqrt(2.0 / 50000.0));
  CHECK(std::all_of(ev.parent.begin(), ev.parent.end(),
                    [](int p) { return p == -1; }));
  std::vector<double> gaps;
  for (std::size_t i = 1; i < ev.times.size(); ++i)
    gaps.push_back(ev.times[i] - ev.times[i - 1]);
  double ks = ks_distance(gaps, [](double x) { return 1.0 - std::exp(-2.0 * x); });
  CHECK(ks * std::sqrt(static_cast<double>(gaps.size())) < 1.36);

  RngStream rng2(105, 0);
  EventSeries ev2 = simulate_hawkes(2.0, exponential_kernel(0.0, 0.1), 50000.0, rng2);
  CHECK(ev.times == ev2.times);
  CHECK(ev.parent == ev2.parent);
}

TEST_CASE("event rate renormalizes the baseline by 1/(1-g)") {
  double gs[] = {0.2, 0.5, 0.8};
  for (int i = 0; i < 3; ++i) {
    double g = gs[i];
    RngStream rng(106, i);
    EventSeries ev = simulate_hawkes(1.0, exponential_kernel(g, 0.1), 20000.0, rng);
    double rate = ev.times.size() / ev.t_max;
    // asymptotic count variance of the stationary process: lambda0 T/(1-g)^3
    double se = std::sqrt(1.0 / (20000.0 * std::pow(1.0 - g, 3)));
    CAPTURE(g);
    CHECK(std::abs(rate - 1.0 / (1.0 - g)) < 3.0 * se);
    double off = offspring_mean(ev, 100.0);
    CHECK(std::abs(off - g) < 0.015);
  }
}

TEST_CASE("power-law kernel sustains the renormalized rate") {
  RngStream rng(107, 0);
  EventSeries ev =
      simulate_hawkes(1.0, power_law_kernel(0.5, 0.5, 200.0), 20000.0, rng);
  double rate = ev.times.size() / ev.t_max;
  CHECK(std::abs(rate - 2.0) < 3.0 * std::sqrt(1.0 / (20000.0 * 0.125)));
  double off = offspring_mean(ev, 200.0);
  CHECK(std::abs(off - 0.5) < 0.015);
}

TEST_CASE("clustered bursts inflate the fano factor") {
  RngStream rng(108, 0);
  EventSeries bursty =
      simulate_hawkes(0.3, exponential_kernel(0.9, 0.1), 20000.0, rng);
  RngStream rngp(118, 0);
  EventSeries flat =
      simulate_hawkes(3.0, exponential_kernel(0.0, 0.1), 20000.0, rngp);
  CHECK(fano_factor(bursty, 50.0) > 10.0);
  CHECK(fano_factor(flat, 50.0) < 1.5);
}

TEST_CASE("hawkes rejects explosive kernels but runs critical power law") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(simulate_hawkes(1.0, exponential_kernel(1.0, 0.1), 100.0, rng),
                  std::range_error);
  CHECK_THROWS_AS(
      simulate_hawkes(1.0, power_law_kernel(1.2, 0.5, 100.0), 100.0, rng),
      std::range_error);
  CHECK_THROWS_AS(simulate_hawkes(0.0, exponential_kernel(0.5, 0.1), 100.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_hawkes(1.0, exponential_kernel(0.5, 0.1), 0.0, rng),
                  std::invalid_argument);

  RngStream rngc(109, 0);
  EventSeries ev =
      simulate_hawkes(0.05, power_law_kernel(1.0, 0.5, 100.0), 200.0, rngc);
  CHECK(ev.times.size() > 0);
  CHECK(ev.times.back() <= 200.0);
}

TEST_CASE("event csv is a single time column") {
  EventSeries ev;
  ev.times = {0.5, 2.0};
  ev.parent = {-1, 0};
  ev.t_max = 3.0;
  CHECK(critlab::to_csv(ev) == "t\n0.5\n2\n");
}

TEST_CASE("estimator recovers the branching ratio on exponential data") {
  struct Run {
    double lambda0, g, t_max;
    std::uint64_t stream;
  };
  Run runs[] = {{1.0, 0.3, 21000.0, 0}, {1.0, 0.6, 12000.0, 3},
                {0.3, 0.9, 10000.0, 2}};
  for (const Run& r : runs) {
    RngStream rng(110, r.stream);
    EventSeries ev =
        simulate_hawkes(r.lambda0, exponential_kernel(r.g, 0.1), r.t_max, rng);
    REQUIRE(ev.times.size() >= 10000);
    HawkesFit fit = estimate_branching_ratio(ev, FeedbackKernel::Kind::exponential);
    CAPTURE(r.g);
    CHECK(std::abs(fit.kernel.g - r.g) < 0.05);
    CHECK(std::abs(fit.lambda0 - r.lambda0) / r.lambda0 < 0.15);
    CHECK(fit.kernel.beta > 0.08);
    CHECK(fit.kernel.beta < 0.12);
    CHECK(std::isfinite(fit.log_likelihood));
  }
}

TEST_CASE("estimator finds no feedback in poisson data") {
  RngStream rng(111, 0);
  EventSeries ev = simulate_hawkes(2.0, exponential_kernel(0.0, 0.1), 15000.0, rng);
  HawkesFit fit = estimate_branching_ratio(ev, FeedbackKernel::Kind::exponential);
  CHECK(fit.kernel.g < 0.05);
  CHECK(std::abs(fit.lambda0 - 2.0) < 0.1);
}

TEST_CASE("wrong kernel family is biased low and loses the likelihood race") {
  RngStream rng(112, 0);
  EventSeries ev =
      simulate_hawkes(0.25, power_law_kernel(0.9, 0.5, 50.0), 4800.0, rng);
  REQUIRE(ev.times.size() >= 10000);
  HawkesFit exp_fit =
      estimate_branching_ratio(ev, FeedbackKernel::Kind::exponential);
  HawkesFit pow_fit =
      estimate_branching_ratio(ev, FeedbackKernel::Kind::power_law, 50.0);
  CHECK(exp_fit.kernel.g < 0.85);
  CHECK(std::abs(pow_fit.kernel.g - 0.9) < 0.05);
  CHECK(pow_fit.kernel.theta > 0.4);
  CHECK(pow_fit.kernel.theta < 0.7);
  CHECK(pow_fit.log_likelihood > exp_fit.log_likelihood + 10.0);
}

TEST_CASE("power family picks its own window when unset") {
  RngStream rng(113, 0);
  EventSeries ev =
      simulate_hawkes(0.25, power_law_kernel(0.3, 0.5, 50.0), 1200.0, rng);
  HawkesFit fit = estimate_branching_ratio(ev, FeedbackKernel::Kind::power_law);
  CHECK(fit.kernel.tau_max == 300.0);
  CHECK(fit.kernel.g > 0.05);
  CHECK(fit.kernel.g < 0.8);
  CHECK(std::isfinite(fit.log_likelihood));
}

TEST_CASE("estimator rejects degenerate inputs") {
  EventSeries tiny;
  for (int i = 0; i < 50; ++i) tiny.times.push_back(i + 0.5);
  tiny.parent.assign(50, -1);
  tiny.t_max = 60.0;
  CHECK_THROWS_AS(estimate_branching_ratio(tiny, FeedbackKernel::Kind::exponential),
                  std::invalid_argument);

  EventSeries shuffled;
  for (int i = 0; i < 200; ++i) shuffled.times.push_back(i % 100 + 0.5);
  shuffled.parent.assign(200, -1);
  shuffled.t_max = 120.0;
  CHECK_THROWS_AS(
      estimate_branching_ratio(shuffled, FeedbackKernel::Kind::exponential),
      std::invalid_argument);

  EventSeries clipped;
  for (int i = 0; i < 200; ++i) clipped.times.push_back(i + 0.5);
  clipped.parent.assign(200, -1);
  clipped.t_max = 100.0;  // earlier than the last event
  CHECK_THROWS_AS(
      estimate_branching_ratio(clipped, FeedbackKernel::Kind::exponential),
      std::invalid_argument);

  EventSeries ok;
  for (int i = 0; i < 200; ++i) ok.times.push_back(i + 0.5);
  ok.parent.assign(200, -1);
  ok.t_max = 200.0;
  CHECK_THROWS_AS(
      estimate_branching_ratio(ok, FeedbackKernel::Kind::power_law, 200.0),
      std::invalid_argument);
}
