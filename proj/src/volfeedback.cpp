#include "critlab/volfeedback.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "critlab/csv.hpp"

namespace critlab {

void FeedbackKernel::validate() const {
  if (g < 0.0 || !std::isfinite(g))
    throw std::invalid_argument("FeedbackKernel: g must be >= 0");
  if (kind == Kind::exponential) {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("FeedbackKernel: beta must be > 0");
  } else {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw std::invalid_argument("FeedbackKernel: theta must be > 0");
    if (!(tau_max >= 1.0) || !std::isfinite(tau_max))
      throw std::invalid_argument(
          "FeedbackKernel: power-law kernel needs a finite window tau_max >= "
          "1");
  }
}

FeedbackKernel exponential_kernel(double g, double beta) {
  FeedbackKernel k;
  k.kind = FeedbackKernel::Kind::exponential;
  k.g = g;
  k.beta = beta;
  k.validate();
  return k;
}

FeedbackKernel power_law_kernel(double g, double theta, double tau_max) {
  FeedbackKernel k;
  k.kind = FeedbackKernel::Kind::power_law;
  k.g = g;
  k.theta = theta;
  k.tau_max = tau_max;
  k.validate();
  return k;
}

TimeSeries simulate_arch(double sigma0, const FeedbackKernel& kernel,
                         int n_steps, RngStream& rng) {
  kernel.validate();
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
    throw std::invalid_argument("simulate_arch: sigma0 must be > 0");
  if (n_steps < 1)
    throw std::invalid_argument("simulate_arch: n_steps must be >= 1");
  if (kernel.g >= 1.0)
    throw std::range_error(
        "simulate_arch: g >= 1 has no finite stationary variance");

  TimeSeries ts;
  ts.dt = 1.0;
  ts.labels = {"r"};
  ts.values.resize(n_steps, 1);
  const double s02 = sigma0 * sigma0;

  if (kernel.kind == FeedbackKernel::Kind::exponential) {
    const double q = std::exp(-kernel.beta);
    const double a1 = kernel.g * (1.0 - q);  // Phi(tau) = a1 q^(tau-1)
    int burn = static_cast<int>(std::ceil(10.0 / kernel.beta));
    double s = 0.0;
    for (int t = 0; t < burn + n_steps; ++t) {
      double r = std::sqrt(s02 + s) * rng.normal();
      if (t >= burn) ts.values(t - burn, 0) = r;
      s = a1 * r * r + q * s;
    }
    return ts;
  }

  int lags = static_cast<int>(kernel.tau_max);
  std::vector<double> w(lags);
  double norm = 0.0;
  for (int j = 0; j < lags; ++j) norm += std::pow(j + 1.0, -1.0 - kernel.theta);
  for (int j = 0; j < lags; ++j)
    w[j] = kernel.g * std::pow(j + 1.0, -1.0 - kernel.theta) / norm;
  int burn = 10 * lags;
  std::vector<double> sq(burn + n_steps);
  for (int t = 0; t < burn + n_steps; ++t) {
    double s = 0.0;
    int reach = std::min(lags, t);
    for (int j = 1; j <= reach; ++j) s += w[j - 1] * sq[t - j];
    double r = std::sqrt(s02 + s) * rng.normal();
    sq[t] = r * r;
    if (t >= burn) ts.values(t - burn, 0) = r;
  }
  return ts;
}

std::string to_csv(const EventSeries& events) {
  std::string out = "t\n";
  for (double t : events.times) {
    append_double(out, t);
    out += '\n';
  }
  return out;
}

void write_csv(const EventSeries& events, const std::string& path) {
  write_text_file(to_csv(events), path);
}

namespace {

// pick the parent of an accepted event from a point already drawn on
// [0, lambda): baseline below lambda0, else an earlier event by its kick
int attribute(double lambda0, double pick,
              const std::function<double(int)>& kick, int first, int last) {
  if (pick < lambda0) return -1;
  double acc = lambda0;
  for (int i = last; i >= first; --i) {
    acc += kick(i);
    if (acc >= pick) return i;
  }
  return first;  // float shortfall, attribute to the oldest in window
}

}  // namespace

EventSeries simulate_hawkes(double lambda0, const FeedbackKernel& kernel,
                            double t_max, RngStream& rng) {
  kernel.validate();
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw std::invalid_argument("simulate_hawkes: lambda0 must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("simulate_hawkes: t_max must be > 0");
  if (kernel.g > 1.0)
    throw std::range_error("simulate_hawkes: g > 1 is explosive");
  if (kernel.g == 1.0 && kernel.kind == FeedbackKernel::Kind::exponential)
    throw std::range_error(
        "simulate_hawkes: the critical process needs a long-memory kernel");

  EventSeries ev;
  ev.t_max = t_max;

  if (kernel.kind == FeedbackKernel::Kind::exponential) {
    const double gb = kernel.g * kernel.beta;
    const double beta = kernel.beta;
    // between events the excitation a only decays, so lambda0 + a bounds
    // the intensity until the next accepted event
    double t = 0.0, a = 0.0;
    while (true) {
      double bound = lambda0 + a;
      double step = rng.exponential(1.0 / bound);
      t += step;
      if (t > t_max) break;
      a *= std::exp(-beta * step);
      double lam = lambda0 + a;
      double u = rng.uniform() * bound;
      if (u >= lam) continue;
      double pick = rng.uniform() * lam;
      int n = static_cast<int>(ev.times.size());
      ev.parent.push_back(attribute(
          lambda0, pick,
          [&](int i) { return gb * std::exp(-beta * (t - ev.times[i])); }, 0,
          n - 1));
      ev.times.push_back(t);
      a += gb;
    }
    return ev;
  }

  const double theta = kernel.theta;
  const double tau = kernel.tau_max;
  const double c =
      kernel.g * theta / (1.0 - std::pow(1.0 + tau, -theta));
  std::size_t head = 0;
  auto excitation = [&](double t) {
    while (head < ev.times.size() && t - ev.times[head] > tau) ++head;
    double s = 0.0;
    for (std::size_t i = head; i < ev.times.size(); ++i)
      s += std::pow(1.0 + (t - ev.times[i]), -1.0 - theta);
    return c * s;
  };
  double t = 0.0;
  while (true) {
    double bound = lambda0 + excitation(t);
    double step = rng.exponential(1.0 / bound);
    t += step;
    if (t > t_max) break;
    double lam = lambda0 + excitation(t);
    double u = rng.uniform() * bound;
    if (u >= lam) continue;
    double pick = rng.uniform() * lam;
    ev.parent.push_back(attribute(
        lambda0, pick,
        [&](int i) {
          return c * std::pow(1.0 + (t - ev.times[i]), -1.0 - theta);
        },
        static_cast<int>(head), static_cast<int>(ev.times.size()) - 1));
    ev.times.push_back(t);
  }
  return ev;
}

namespace {

using Params = std::array<double, 3>;

// Nelder-Mead on three parameters, small and self-contained
Params nelder_mead(const std::function<double(const Params&)>& f, Params x0,
                   double scale, int iters, double* best_f) {
  std::array<Params, 4> xs;
  std::array<double, 4> fs;
  xs[0] = x0;
  for (int v = 1; v < 4; ++v) {
    xs[v] = x0;
    xs[v][v - 1] += scale;
  }
  for (int v = 0; v < 4; ++v) fs[v] = f(xs[v]);
  auto order = [&] {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (fs[j] < fs[i]) {
          std::swap(fs[i], fs[j]);
          std::swap(xs[i], xs[j]);
        }
  };
  auto blend = [](const Params& a, const Params& b, double w) {
    Params r;
    for (int d = 0; d < 3; ++d) r[d] = a[d] + w * (b[d] - a[d]);
    return r;
  };
  order();
  for (int it = 0; it < iters; ++it) {
    if (std::abs(fs[3] - fs[0]) <= 1e-10 * (1.0 + std::abs(fs[0]))) break;
    Params mid{};
    for (int v = 0; v < 3; ++v)
      for (int d = 0; d < 3; ++d) mid[d] += xs[v][d] / 3.0;
    Params refl = blend(mid, xs[3], -1.0);
    double fr = f(refl);
    if (fr < fs[0]) {
      Params expd = blend(mid, xs[3], -2.0);
      double fe = f(expd);
      if (fe < fr) {
        xs[3] = expd;
        fs[3] = fe;
      } else {
        xs[3] = refl;
        fs[3] = fr;
      }
    } else if (fr < fs[2]) {
      xs[3] = refl;
      fs[3] = fr;
    } else {
      Params con = blend(mid, xs[3], 0.5);
      double fc = f(con);
      if (fc < fs[3]) {
        xs[3] = con;
        fs[3] = fc;
      } else {
        for (int v = 1; v < 4; ++v) {
          xs[v] = blend(xs[0], xs[v], 0.5);
          fs[v] = f(xs[v]);
        }
      }
    }
    order();
  }
  *best_f = fs[0];
  return xs[0];
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

HawkesFit estimate_branching_ratio(const EventSeries& events,
                                   FeedbackKernel::Kind family,
                                   double tau_max) {
  const std::vector<double>& ts = events.times;
  std::size_t n = ts.size();
  if (n < 100)
    throw std::invalid_argument(
        "estimate_branching_ratio: needs at least 100 events");
  for (std::size_t i = 1; i < n; ++i)
    if (!(ts[i] > ts[i - 1]))
      throw std::invalid_argument(
          "estimate_branching_ratio: times must be strictly increasing");
  double horizon = events.t_max > 0.0 ? events.t_max : ts.back();
  if (horizon < ts.back())
    throw std::invalid_argument(
        "estimate_branching_ratio: t_max earlier than the last event");
  double rate = n / horizon;

  std::function<double(const Params&)> neg_ll;
  if (family == FeedbackKernel::Kind::exponential) {
    neg_ll = [&](const Params& x) {
      double l0 = std::exp(x[0]);
      double g = logistic(x[1]);
      double beta = std::exp(x[2]);
      double gb = g * beta;
      double ll = 0.0, a = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) a = (a + gb) * std::exp(-beta * (ts[k] - ts[k - 1]));
        ll += std::log(l0 + a);
      }
      double comp = l0 * horizon;
      for (std::size_t i = 0; i < n; ++i)
        comp += g * (1.0 - std::exp(-beta * (horizon - ts[i])));
      return comp - ll;
    };
  } else {
    double tau = tau_max > 0.0 ? tau_max : std::min(horizon / 4.0, 2000.0);
    if (tau >= horizon)
      throw std::invalid_argument(
          "estimate_branching_ratio: window must be shorter than the run");
    // flatten log-lags within the window once, the likelihood only
    // re-exponentiates them
    std::vector<double> lag_logs;
    std::vector<std::size_t> row_end(n);
    std::size_t head = 0;
    for (std::size_t k = 0; k < n; ++k) {
      while (ts[k] - ts[head] > tau) ++head;
      for (std::size_t i = head; i < k; ++i)
        lag_logs.push_back(std::log1p(ts[k] - ts[i]));
      row_end[k] = lag_logs.size();
    }
    std::vector<double> cens_logs(n);
    for (std::size_t i = 0; i < n; ++i)
      cens_logs[i] = std::log1p(std::min(horizon - ts[i], tau));
    double log_win = std::log1p(tau);
    neg_ll = [&, lag_logs = std::move(lag_logs), row_end = std::move(row_end),
              cens_logs = std::move(cens_logs), log_win,
              tau](const Params& x) {
      double l0 = std::exp(x[0]);
      double g = logistic(x[1]);
      double theta = std::exp(x[2]);
      double mass_win = -std::expm1(-theta * log_win);
      double c = g * theta / mass_win;
      double ll = 0.0;
      std::size_t begin = 0;
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = begin; j < row_end[k]; ++j)
          s += std::exp(-(1.0 + theta) * lag_logs[j]);
        begin = row_end[k];
        ll += std::log(l0 + c * s);
      }
      double comp = l0 * horizon;
      for (std::size_t i = 0; i < n; ++i)
        comp += g * (-std::expm1(-theta * cens_logs[i])) / mass_win;
      return comp - ll;
    };
    HawkesFit fit;
    fit.kernel.kind = FeedbackKernel::Kind::power_law;
    fit.kernel.tau_max = tau;
    double best = std::numeric_limits<double>::infinity();
    for (double g0 : {0.3, 0.7})
      for (double th0 : {0.4, 1.0}) {
        Params x0{std::log(rate * (1.0 - g0)), std::log(g0 / (1.0 - g0)),
                  std::log(th0)};
        double fbest;
        Params x = nelder_mead(neg_ll, x0, 0.4, 200, &fbest);
        if (fbest < best) {
          best = fbest;
          fit.lambda0 = std::exp(x[0]);
          fit.kernel.g = logistic(x[1]);
          fit.kernel.theta = std::exp(x[2]);
          fit.log_likelihood = -fbest;
        }
      }
    if (!std::isfinite(fit.log_likelihood))
      throw std::range_error(
          "estimate_branching_ratio: optimization failed, likelihood is not "
          "finite");
    return fit;
  }

  HawkesFit fit;
  fit.kernel.kind = FeedbackKernel::Kind::exponential;
  double best = std::numeric_limits<double>::infinity();
  for (double g0 : {0.3, 0.7})
    for (double b0 : {0.03, 0.3}) {
      Params x0{std::log(rate * (1.0 - g0)), std::log(g0 / (1.0 - g0)),
                std::log(b0)};
      double fbest;
      Params x = nelder_mead(neg_ll, x0, 0.4, 250, &fbest);
      if (fbest < best) {
        best = fbest;
        fit.lambda0 = std::exp(x[0]);
        fit.kernel.g = logistic(x[1]);
        fit.kernel.beta = std::exp(x[2]);
        fit.log_likelihood = -fbest;
      }
    }
  if (!std::isfinite(fit.log_likelihood))
    throw std::range_error(
        "estimate_branching_ratio: optimization failed, likelihood is not "
        "finite");
  return fit;
}

}  // namespace critlab
