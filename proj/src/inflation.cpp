#include "critlab/inflation.hpp"

#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "critlab/csv.hpp"

namespace critlab {

void RepricingConfig::validate() const {
  if (n_firms < 1)
    throw std::invalid_argument("RepricingConfig: n_firms must be >= 1");
  if (!std::isfinite(p_minus) || !std::isfinite(p_plus) || !(p_minus < p_plus))
    throw std::invalid_argument("RepricingConfig: need p_minus < p_plus");
  if (!(p_plus > 0.0))
    throw std::invalid_argument("RepricingConfig: p_plus must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("RepricingConfig: gamma must be > 0");
  if (!(i0 > 0.0) || !std::isfinite(i0))
    throw std::invalid_argument("RepricingConfig: i0 must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("RepricingConfig: dt must be > 0");
  if (coupling < 0.0 || !std::isfinite(coupling))
    throw std::invalid_argument("RepricingConfig: coupling must be >= 0");
}

RepricingState make_repricing_state(const RepricingConfig& cfg,
                                    RngStream& rng) {
  cfg.validate();
  RepricingState state;
  state.prices.resize(cfg.n_firms);
  double span = cfg.p_plus - cfg.p_minus;
  for (int i = 0; i < cfg.n_firms; ++i)
    state.prices[i] = cfg.p_minus + span * rng.uniform();
  state.inflation = cfg.i0;
  return state;
}

namespace {

struct CascadeOutcome {
  std::uint64_t size = 0;
  std::uint64_t seeds = 0;
  std::int64_t waves = 0;
  bool capped = false;
  double shift = 0.0;  // total impulse shift delivered to the ensemble
};

using HeapEntry = std::pair<double, int>;
using MinHeap =
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

// Forced repricings, resolved wave after wave with the boundary frozen in
// between (the fast phase). Instead of shifting every price down per
// repricing, the working floor rises by `pulse`; the difference is removed
// from all prices at the end. Stale heap entries are recognised by value:
// a reprice always raises the firm's stored price, so the only live entry
// equals the current one.
CascadeOutcome resolve_cascade(const RepricingConfig& cfg, Eigen::VectorXd& p,
                               std::uint64_t cap) {
  int n = static_cast<int>(p.size());
  const double pulse = cfg.coupling * (cfg.p_plus - cfg.p_minus) / n;
  CascadeOutcome out;
  double floor = 0.0;

  if ((p.array() >= cfg.p_minus).all()) return out;

  std::vector<HeapEntry> entries;
  entries.reserve(p.size());
  for (int i = 0; i < n; ++i) entries.emplace_back(p[i], i);
  MinHeap heap(std::greater<>{}, std::move(entries));

  std::vector<int> wave;
  while (!out.capped) {
    wave.clear();
    while (!heap.empty() && heap.top().first < cfg.p_minus + floor) {
      auto [value, firm] = heap.top();
      heap.pop();
      if (value == p[firm]) wave.push_back(firm);
    }
    if (wave.empty()) break;
    if (out.waves == 0) out.seeds = wave.size();
    ++out.waves;
    for (int firm : wave) {
      if (out.size >= cap) {
        out.capped = true;
        break;
      }
      ++out.size;
      floor += pulse;
      p[firm] = cfg.p_plus + floor;
      heap.emplace(p[firm], firm);
    }
  }
  // Hitting the cap means one population's worth of forced renewals inside
  // a single step; the microdynamics would re-trigger forever (that is the
  // divergence the cap prevents), so the fast phase ends in a synchronized
  // global renewal at the top of the band.
  if (out.capped) p.setConstant(cfg.p_plus + floor);

  out.shift = floor;
  if (floor > 0.0) p.array() -= floor;
  return out;
}

// Spontaneous renewals, drift, cascade; returns the cascade outcome and
// leaves inflation/time updated. `cap` bounds the forced count per step.
CascadeOutcome advance(const RepricingConfig& cfg, RepricingState& state,
                       RngStream& rng, std::uint64_t cap) {
  if (state.prices.size() != cfg.n_firms)
    throw std::invalid_argument("step_abm: state does not match config");
  const double renew_prob = -std::expm1(-cfg.gamma * cfg.dt);
  const double drift_rate =
      cfg.i0 + cfg.coupling * cfg.gamma * (cfg.p_plus - state.prices.mean());
  const double drift = drift_rate * cfg.dt;
  for (int i = 0; i < cfg.n_firms; ++i) {
    double v = rng.uniform() < renew_prob ? cfg.p_plus : state.prices[i];
    state.prices[i] = v - drift;
  }
  CascadeOutcome out = resolve_cascade(cfg, state.prices, cap);
  state.inflation = drift_rate + out.shift / cfg.dt;
  state.time += cfg.dt;
  return out;
}

}  // namespace

std::optional<RepricingCascade> step_abm(const RepricingConfig& cfg,
                                         RepricingState& state,
                                         RngStream& rng) {
  cfg.validate();
  std::uint64_t cap = 2 * static_cast<std::uint64_t>(cfg.n_firms);
  CascadeOutcome out = advance(cfg, state, rng, cap);
  if (out.capped)
    throw std::range_error(
        "step_abm: runaway cascade, coupling too large for a stationary "
        "state");
  if (out.size == 0) return std::nullopt;
  RepricingCascade cascade;
  cascade.record.size = out.size;
  cascade.record.duration = out.waves;
  cascade.record.capped = false;
  cascade.seeds = out.seeds;
  cascade.time = state.time;
  return cascade;
}

double StationaryDensity::operator()(double p) const {
  if (p < p_minus || p > p_plus) return 0.0;
  double lam = gamma / i_st;
  return lam * std::exp(lam * (p - p_minus)) /
         std::expm1(lam * (p_plus - p_minus));
}

double StationaryDensity::cdf(double p) const {
  if (p <= p_minus) return 0.0;
  if (p >= p_plus) return 1.0;
  double lam = gamma / i_st;
  return std::expm1(lam * (p - p_minus)) / std::expm1(lam * (p_plus - p_minus));
}

StationaryDensity stationary_density(const RepricingConfig& cfg) {
  cfg.validate();
  if (cfg.coupling >= 1.0)
    throw std::range_error(
        "stationary_density: no stationary state at coupling >= 1");
  const double span = cfg.p_plus - cfg.p_minus;
  double i = cfg.i0 / (1.0 - cfg.coupling);
  bool converged = false;
  for (int k = 0; k < 500 && !converged; ++k) {
    double u = cfg.gamma * span / i;
    double boundary_mass = u / std::expm1(u);  // P(p_minus) * span
    double mean_above = span * (1.0 + 1.0 / std::expm1(u) - 1.0 / u);
    double next = (cfg.i0 + cfg.coupling * cfg.gamma * (span - mean_above)) /
                  (1.0 - cfg.coupling * boundary_mass);
    converged = std::abs(next - i) <= 1e-14 * next;
    i = next;
  }
  if (!converged)
    throw std::range_error("stationary_density: fixed point did not converge");
  StationaryDensity law;
  law.i_st = i;
  law.scale_ratio = cfg.gamma * span / i;
  law.p_minus = cfg.p_minus;
  law.p_plus = cfg.p_plus;
  law.gamma = cfg.gamma;
  return law;
}

TimeSeries supercritical_run(const RepricingConfig& cfg, double t_max,
                             RngStream& rng) {
  cfg.validate();
  if (cfg.coupling < 1.0)
    throw std::invalid_argument(
        "supercritical_run: below coupling = 1 use step_abm, the stationary "
        "state exists");
  if (!(t_max > 0.0))
    throw std::invalid_argument("supercritical_run: t_max must be > 0");
  int steps = static_cast<int>(std::ceil(t_max / cfg.dt));
  RepricingState state = make_repricing_state(cfg, rng);
  TimeSeries ts;
  ts.dt = cfg.dt;
  ts.labels = {"I", "cascade_size"};
  ts.values.resize(steps, 2);
  std::uint64_t cap = static_cast<std::uint64_t>(cfg.n_firms);
  for (int s = 0; s < steps; ++s) {
    CascadeOutcome out = advance(cfg, state, rng, cap);
    ts.values(s, 0) = state.inflation;
    ts.values(s, 1) = static_cast<double>(out.size);
  }
  return ts;
}

std::string to_csv(const std::vector<RepricingCascade>& cascades) {
  std::string out = "t,size\n";
  for (const auto& c : cascades) {
    append_double(out, c.time);
    out += ',';
    append_u64(out, c.record.size);
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<RepricingCascade>& cascades,
               const std::string& path) {
  write_text_file(to_csv(cascades), path);
}

}  // namespace critlab
