#include "critlab/sweep.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "critlab/csv.hpp"

namespace critlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const SweepConfig& cfg) {
  if (cfg.mu <= 0.0 || cfg.dt <= 0.0)
    throw std::invalid_argument("sweep: mu and dt must be positive");
  if (cfg.gamma < 0.0)
    throw std::invalid_argument("sweep: gamma must be non-negative");
  if (cfg.mu * cfg.dt >= 0.01)
    throw std::invalid_argument("sweep: need mu * dt < 0.01");
  if (cfg.system_size < 1000)
    throw std::invalid_argument("sweep: system_size must be at least 1000");
  if (cfg.path_stride < 1)
    throw std::invalid_argument("sweep: path_stride must be at least 1");
  if (cfg.offspring == OffspringDistribution::Kind::zeta_tail &&
      (!(cfg.offspring_alpha > 1.0) || !(cfg.offspring_alpha <= 2.0)))
    throw std::invalid_argument("sweep: offspring_alpha must lie in (1, 2]");
}

// Builds offspring laws at the sliding mean. The heavy-tailed kind needs a
// bisection per mean, so those are cached on a 2^-10 grid.
class OffspringFactory {
 public:
  OffspringFactory(OffspringDistribution::Kind kind, double alpha)
      : kind_(kind), alpha_(alpha) {}

  const OffspringDistribution& at(double mean) {
    switch (kind_) {
      case OffspringDistribution::Kind::poisson:
        scratch_ = OffspringDistribution::poisson(mean);
        return scratch_;
      case OffspringDistribution::Kind::bernoulli_pair:
        scratch_ = OffspringDistribution::bernoulli_pair(std::min(mean, 2.0));
        return scratch_;
      case OffspringDistribution::Kind::zeta_tail:
        break;
    }
    auto key = static_cast<std::int64_t>(std::llround(mean * 1024.0));
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_
               .emplace(key, OffspringDistribution::zeta_tail(
                                 static_cast<double>(key) / 1024.0, alpha_))
               .first;
    }
    return it->second;
  }

 private:
  OffspringDistribution::Kind kind_;
  double alpha_;
  OffspringDistribution scratch_ = OffspringDistribution::poisson(0.0);
  std::unordered_map<std::int64_t, OffspringDistribution> cache_;
};

// Next slope at which a landslide fires, from the hazard gamma (r0 - 1)^+:
// inverting the integrated hazard gives 1 + sqrt(2 mu E / gamma), E ~ Exp(1).
double draw_landslide_level(const SweepConfig& cfg, RngStream& rng) {
  if (cfg.gamma == 0.0) return kInf;
  return 1.0 + std::sqrt(2.0 * cfg.mu * rng.exponential(1.0) / cfg.gamma);
}

// Avalanche at the given slope conditioned on spanning the system.
AvalancheRecord spanning_run(OffspringFactory& factory, double r0,
                             std::uint64_t cap, RngStream& rng) {
  const OffspringDistribution& off = factory.at(r0);
  for (;;) {
    AvalancheRecord rec = run_avalanche(off, cap, rng);
    if (rec.capped) return rec;
  }
}

}  // namespace

SweepResult simulate_sweep(const SweepConfig& cfg, double t_max, RngStream& rng) {
  validate(cfg);
  if (t_max <= 0.0) throw std::invalid_argument("sweep: t_max must be positive");

  double sample_dt = cfg.dt * static_cast<double>(cfg.path_stride);
  auto n_rows = static_cast<Eigen::Index>(std::floor(t_max / sample_dt)) + 1;

  SweepResult out;
  out.r0_path.dt = sample_dt;
  out.r0_path.values.resize(n_rows, 1);
  out.r0_path.labels = {"r0"};

  OffspringFactory factory(cfg.offspring, cfg.offspring_alpha);

  double t_reset = 0.0;  // r0(t) = mu * (t - t_reset)
  double next_trigger =
      cfg.gamma > 0.0 ? rng.exponential(1.0 / cfg.gamma) : kInf;
  double slide_level = draw_landslide_level(cfg, rng);
  double t_slide = t_reset + slide_level / cfg.mu;
  Eigen::Index row = 0;

  for (;;) {
    double t_sample = row < n_rows ? static_cast<double>(row) * sample_dt : kInf;
    if (t_slide <= t_max && t_slide <= next_trigger && t_slide <= t_sample) {
      AvalancheRecord rec =
          spanning_run(factory, slide_level, cfg.system_size, rng);
      out.events.push_back(
          {t_slide, slide_level, rec.size, rec.duration, true});
      t_reset = t_slide;
      slide_level = draw_landslide_level(cfg, rng);
      t_slide = t_reset + slide_level / cfg.mu;
    } else if (next_trigger <= t_max && next_trigger <= t_sample) {
      double r0 = cfg.mu * (next_trigger - t_reset);
      AvalancheRecord rec =
          run_avalanche(factory.at(r0), cfg.system_size, rng);
      out.events.push_back({next_trigger, r0, rec.size, rec.duration, false});
      next_trigger += rng.exponential(1.0 / cfg.gamma);
    } else if (row < n_rows) {
      out.r0_path.values(row, 0) = cfg.mu * (t_sample - t_reset);
      ++row;
    } else {
      break;
    }
  }
  return out;
}

std::function<double(double)> stationary_slope_density(const SweepConfig& cfg) {
  validate(cfg);
  if (cfg.gamma == 0.0)
    throw std::invalid_argument(
        "sweep: no stationary law without triggers (gamma = 0)");
  double z = 1.0 + std::sqrt(std::numbers::pi * cfg.mu / (2.0 * cfg.gamma));
  double decay = cfg.gamma / (2.0 * cfg.mu);
  return [z, decay](double r0) {
    if (r0 < 0.0) return 0.0;
    if (r0 <= 1.0) return 1.0 / z;
    double d = r0 - 1.0;
    return std::exp(-decay * d * d) / z;
  };
}

double sample_stationary_slope(const SweepConfig& cfg, RngStream& rng) {
  validate(cfg);
  if (cfg.gamma == 0.0)
    throw std::invalid_argument(
        "sweep: no stationary law without triggers (gamma = 0)");
  double z = 1.0 + std::sqrt(std::numbers::pi * cfg.mu / (2.0 * cfg.gamma));
  if (rng.uniform() * z < 1.0) return rng.uniform();
  return 1.0 + std::sqrt(cfg.mu / cfg.gamma) * std::abs(rng.normal());
}

std::vector<SweepEvent> mixture_avalanche_law(const SweepConfig& cfg,
                                              std::int64_t n_samples,
                                              RngStream& rng) {
  validate(cfg);
  if (n_samples < 1)
    throw std::invalid_argument("sweep: n_samples must be at least 1");
  OffspringFactory factory(cfg.offspring, cfg.offspring_alpha);
  std::vector<SweepEvent> events;
  events.reserve(static_cast<std::size_t>(n_samples));
  for (std::int64_t i = 0; i < n_samples; ++i) {
    double r0 = sample_stationary_slope(cfg, rng);
    AvalancheRecord rec = run_avalanche(factory.at(r0), cfg.system_size, rng);
    events.push_back({static_cast<double>(i), r0, rec.size, rec.duration,
                      rec.capped});
  }
  return events;
}

std::string to_csv(const std::vector<SweepEvent>& events) {
  std::string out = "t,r0_at_trigger,size,duration,landslide\n";
  out.reserve(out.size() + events.size() * 32);
  for (const auto& e : events) {
    append_double(out, e.t);
    out += ',';
    append_double(out, e.r0_at_trigger);
    out += ',';
    append_u64(out, e.size);
    out += ',';
    append_i64(out, e.duration);
    out += ',';
    out += e.landslide ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<SweepEvent>& events, const std::string& path) {
  write_text_file(path, to_csv(events));
}

}  // namespace critlab
