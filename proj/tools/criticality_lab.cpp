// Config-driven experiment runner. One JSON config in, CSV/JSON outputs plus
// a hashed manifest out. Exit codes: 0 success, 2 config error, 3 model error.
//
// Replicas are independent streams (seed, replica index) and each replica
// writes only its own files, so outputs are byte-identical for any --threads.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "critlab/branching.hpp"
#include "critlab/glv.hpp"
#include "critlab/inflation.hpp"
#include "critlab/prodnet.hpp"
#include "critlab/rng.hpp"
#include "critlab/series.hpp"
#include "critlab/stochastic.hpp"
#include "critlab/sweep.hpp"
#include "critlab/timeliness.hpp"
#include "critlab/volfeedback.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// shortest round-trip decimal, same style the library csv writers use
std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

struct ConfigFile {
  std::string path;
  std::string text;
  json root;

  // "path:line" of the first occurrence of "key", best effort
  std::string anchor(const std::string& key) const {
    std::string needle = "\"" + key + "\"";
    std::size_t pos = text.find(needle);
    if (pos == std::string::npos) pos = 0;
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos; ++i)
      if (text[i] == '\n') ++line;
    return path + ":" + std::to_string(line);
  }
};

ConfigFile load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  ConfigFile file{path, ss.str(), {}};
  try {
    file.root = json::parse(file.text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!file.root.is_object())
    throw ConfigError(path + ":1: top level must be a JSON object");
  return file;
}

// Strict accessor over one JSON object: every key must be consumed by the
// schema or finish() rejects it.
class ParamTable {
 public:
  ParamTable(const json& obj, const ConfigFile& file, std::string scope)
      : obj_(obj), file_(file), scope_(std::move(scope)) {
    if (!obj_.is_object())
      throw ConfigError(file_.anchor(scope_) + ": " + scope_ +
                        " must be an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(file_.anchor(key) + ": " + msg);
  }

  double number(const char* key) {
    const json& v = fetch(key);
    if (!v.is_number()) fail(key, scope_ + "." + key + " must be a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::int64_t integer(const char* key) {
    const json& v = fetch(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9.0e15)
        return static_cast<std::int64_t>(d);
    }
    fail(key, scope_ + "." + key + " must be an integer");
  }
  std::int64_t integer(const char* key, std::int64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t seed_value(const char* key) {
    const json& v = fetch(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(key, scope_ + "." + key + " must be a non-negative integer");
  }

  std::string str(const char* key) {
    const json& v = fetch(key);
    if (!v.is_string()) fail(key, scope_ + "." + key + " must be a string");
    return v.get<std::string>();
  }
  std::string str(const char* key, const std::string& fallback) {
    return has(key) ? str(key) : fallback;
  }

  json object(const char* key) {
    const json& v = fetch(key);
    if (!v.is_object()) fail(key, scope_ + "." + key + " must be an object");
    return v;
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!used_.count(item.key()))
        fail(item.key(),
             "unknown key \"" + item.key() + "\" in " + scope_);
  }

 private:
  const json& fetch(const char* key) {
    if (!obj_.contains(key))
      throw ConfigError(file_.anchor(scope_) + ": " + scope_ + "." + key +
                        " is required");
    used_.insert(key);
    return obj_.at(key);
  }

  const json& obj_;
  const ConfigFile& file_;
  std::string scope_;
  std::set<std::string> used_;
};

// One replica's products: file basename fragments plus the headline number.
// The tag carries the replica suffix ("" for a single-replica run).
struct ReplicaFiles {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  double stat = 0.0;
};

struct Model {
  std::string stat_name;
  std::function<ReplicaFiles(std::uint64_t seed, int replica,
                             const std::string& tag)>
      run;
};

Model build_ou(ParamTable& p) {
  double kappa = p.number("kappa");
  double sigma = p.number("sigma", 1.0);
  double x0 = p.number("x0", 0.0);
  double dt = p.number("dt");
  std::int64_t n_steps = p.integer("n_steps");
  Model m;
  m.stat_name = "variance";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::TimeSeries ts =
        critlab::simulate_ou(kappa, {sigma}, x0, dt, n_steps, rng);
    ReplicaFiles out;
    auto tail = ts.values.col(0).tail(ts.rows() / 2);
    double mean = tail.mean();
    out.stat = (tail.array() - mean).square().sum() /
               static_cast<double>(tail.size());
    out.files.emplace_back("ou" + tag + ".csv", critlab::to_csv(ts));
    return out;
  };
  return m;
}

Model build_branching(ParamTable& p) {
  double r0 = p.number("r0");
  std::string kind = p.str("offspring", "poisson");
  if (kind != "poisson" && kind != "bernoulli_pair" && kind != "zeta_tail")
    p.fail("offspring",
           "offspring must be poisson, bernoulli_pair or zeta_tail");
  double alpha = 0.0;
  if (kind == "zeta_tail")
    alpha = p.number("alpha");
  else if (p.has("alpha"))
    p.fail("alpha", "alpha only applies to zeta_tail offspring");
  std::int64_t n_avalanches = p.integer("n_avalanches");
  std::int64_t size_cap = p.integer("size_cap");
  Model m;
  m.stat_name = "mean_size";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::OffspringDistribution dist =
        kind == "poisson" ? critlab::OffspringDistribution::poisson(r0)
        : kind == "bernoulli_pair"
            ? critlab::OffspringDistribution::bernoulli_pair(r0)
            : critlab::OffspringDistribution::zeta_tail(r0, alpha);
    auto records = critlab::avalanche_ensemble(
        dist, n_avalanches, static_cast<std::uint64_t>(size_cap), rng);
    double sum = 0.0;
    for (const auto& rec : records) sum += static_cast<double>(rec.size);
    ReplicaFiles out;
    out.stat = sum / static_cast<double>(records.size());
    out.files.emplace_back("avalanches" + tag + ".csv",
                           critlab::to_csv(records));
    return out;
  };
  return m;
}

Model build_sweep(ParamTable& p) {
  critlab::SweepConfig c;
  c.mu = p.number("mu", c.mu);
  c.gamma = p.number("gamma", c.gamma);
  c.dt = p.number("dt", c.dt);
  c.system_size = static_cast<std::uint64_t>(
      p.integer("system_size", static_cast<std::int64_t>(c.system_size)));
  std::string kind = p.str("offspring", "poisson");
  if (kind == "poisson")
    c.offspring = critlab::OffspringDistribution::Kind::poisson;
  else if (kind == "bernoulli_pair")
    c.offspring = critlab::OffspringDistribution::Kind::bernoulli_pair;
  else if (kind == "zeta_tail")
    c.offspring = critlab::OffspringDistribution::Kind::zeta_tail;
  else
    p.fail("offspring",
           "offspring must be poisson, bernoulli_pair or zeta_tail");
  if (kind == "zeta_tail")
    c.offspring_alpha = p.number("offspring_alpha", c.offspring_alpha);
  else if (p.has("offspring_alpha"))
    p.fail("offspring_alpha",
           "offspring_alpha only applies to zeta_tail offspring");
  c.path_stride = p.integer("path_stride", c.path_stride);
  double t_max = p.number("t_max");
  Model m;
  m.stat_name = "mean_size";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::SweepResult res = critlab::simulate_sweep(c, t_max, rng);
    std::string events = "t,r0_at_trigger,size,duration,landslide\n";
    double sum = 0.0;
    for (const auto& e : res.events) {
      events += fmt_double(e.t) + ',' + fmt_double(e.r0_at_trigger) + ',' +
                std::to_string(e.size) + ',' + std::to_string(e.duration) +
                ',' + (e.landslide ? "1" : "0") + '\n';
      sum += static_cast<double>(e.size);
    }
    ReplicaFiles out;
    out.stat = res.events.empty()
                   ? 0.0
                   : sum / static_cast<double>(res.events.size());
    out.files.emplace_back("r0_path" + tag + ".csv",
                           critlab::to_csv(res.r0_path));
    out.files.emplace_back("events" + tag + ".csv", std::move(events));
    return out;
  };
  return m;
}

Model build_glv(ParamTable& p) {
  int n = static_cast<int>(p.integer("n"));
  double sigma_a = p.number("sigma_a");
  double dt = p.number("dt", 0.05);
  double t_max = p.number("t_max", 500.0);
  double floor = p.number("extinction_floor", 1e-10);
  double x0 = p.number("x0", 1.0);
  Model m;
  m.stat_name = "kappa_star";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::Ecology eco = critlab::random_symmetric_ecology(n, sigma_a, rng);
    critlab::CommunityState state = critlab::integrate_glv(
        eco, Eigen::VectorXd::Constant(n, x0), dt, t_max, floor);
    critlab::StabilityReport report = critlab::stability_report(eco, state);
    ReplicaFiles out;
    out.stat = report.kappa_star;
    out.files.emplace_back("community" + tag + ".csv", critlab::to_csv(state));
    return out;
  };
  return m;
}

Model build_timeliness(ParamTable& p) {
  std::string network = p.str("network");
  int n = 0, k = 0, n_layers = 0, width = 0;
  if (network == "chain") {
    n = static_cast<int>(p.integer("n"));
  } else if (network == "random_regular") {
    n = static_cast<int>(p.integer("n"));
    k = static_cast<int>(p.integer("k"));
  } else if (network == "dag_layered") {
    n_layers = static_cast<int>(p.integer("n_layers"));
    width = static_cast<int>(p.integer("width"));
    k = static_cast<int>(p.integer("k"));
  } else {
    p.fail("network",
           "network must be chain, random_regular or dag_layered");
  }
  double mean = p.number("mean", 1.0);
  double b_lo = p.number("b_lo");
  double b_hi = p.number("b_hi");
  int t_steps = static_cast<int>(p.integer("t_steps", 20000));
  Model m;
  m.stat_name = "b_c";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream base(seed, replica);
    critlab::RngStream net_rng = base.substream(1);
    critlab::TaskNetwork net =
        network == "chain" ? critlab::chain_network(n)
        : network == "random_regular"
            ? critlab::random_regular_network(n, k, net_rng)
            : critlab::dag_layered_network(n_layers, width, k, net_rng);
    double bc =
        critlab::find_critical_buffer(net, {mean}, b_lo, b_hi, base, t_steps);
    ReplicaFiles out;
    out.stat = bc;
    out.files.emplace_back("buffer" + tag + ".csv",
                           "b_c\n" + fmt_double(bc) + "\n");
    return out;
  };
  return m;
}

Model build_prodnet(ParamTable& p) {
  int n = static_cast<int>(p.integer("n"));
  double q = p.number("q");
  double z_lo = p.number("z_lo");
  double z_hi = p.number("z_hi");
  Model m;
  m.stat_name = "min_real_part";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::FirmNetwork net =
        critlab::random_firm_network(n, q, z_lo, z_hi, rng);
    critlab::SpectrumReport report = critlab::feasibility(net);
    ReplicaFiles out;
    out.stat = report.min_real_part;
    out.files.emplace_back("spectrum" + tag + ".json",
                           critlab::to_json(report));
    return out;
  };
  return m;
}

Model build_inflation(ParamTable& p) {
  critlab::RepricingConfig c;
  c.n_firms = static_cast<int>(p.integer("n_firms"));
  c.p_minus = p.number("p_minus", 0.0);
  c.p_plus = p.number("p_plus", 1.0);
  c.gamma = p.number("gamma");
  c.coupling = p.number("coupling");
  c.i0 = p.number("i0");
  c.dt = p.number("dt");
  double t_max = p.number("t_max");
  Model m;
  m.stat_name = "mean_inflation";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::RepricingState state = critlab::make_repricing_state(c, rng);
    auto n_steps = static_cast<std::int64_t>(std::llround(t_max / c.dt));
    if (n_steps < 1)
      throw std::invalid_argument("inflation: t_max shorter than one step");
    critlab::TimeSeries ts;
    ts.dt = c.dt;
    ts.values.resize(n_steps, 1);
    ts.labels = {"I"};
    std::vector<critlab::RepricingCascade> cascades;
    for (std::int64_t i = 0; i < n_steps; ++i) {
      auto cascade = critlab::step_abm(c, state, rng);
      ts.values(i, 0) = state.inflation;
      if (cascade) cascades.push_back(*cascade);
    }
    ReplicaFiles out;
    out.stat = ts.values.col(0).mean();
    out.files.emplace_back("inflation" + tag + ".csv", critlab::to_csv(ts));
    out.files.emplace_back("cascades" + tag + ".csv",
                           critlab::to_csv(cascades));
    return out;
  };
  return m;
}

// shared by arch and hawkes: kernel construction stays inside the replica so
// its validation surfaces as a model error, not a config error
struct KernelSpec {
  bool power_law = false;
  double g = 0.0, beta = 0.05, theta = 0.5, tau_max = 0.0;
  critlab::FeedbackKernel build() const {
    return power_law ? critlab::power_law_kernel(g, theta, tau_max)
                     : critlab::exponential_kernel(g, beta);
  }
};

KernelSpec parse_kernel(ParamTable& p) {
  KernelSpec spec;
  spec.g = p.number("g");
  std::string kind = p.str("kernel", "exponential");
  if (kind == "exponential") {
    spec.beta = p.number("beta", 0.05);
    if (p.has("theta") || p.has("tau_max"))
      p.fail("kernel", "theta and tau_max only apply to power_law kernels");
  } else if (kind == "power_law") {
    spec.power_law = true;
    spec.theta = p.number("theta", 0.5);
    spec.tau_max = p.number("tau_max");
    if (p.has("beta"))
      p.fail("beta", "beta only applies to exponential kernels");
  } else {
    p.fail("kernel", "kernel must be exponential or power_law");
  }
  return spec;
}

Model build_arch(ParamTable& p) {
  double sigma0 = p.number("sigma0");
  KernelSpec spec = parse_kernel(p);
  std::int64_t n_steps = p.integer("n_steps");
  Model m;
  m.stat_name = "variance";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::TimeSeries ts = critlab::simulate_arch(
        sigma0, spec.build(), static_cast<int>(n_steps), rng);
    ReplicaFiles out;
    out.stat = ts.values.col(0).squaredNorm() / static_cast<double>(ts.rows());
    out.files.emplace_back("returns" + tag + ".csv", critlab::to_csv(ts));
    return out;
  };
  return m;
}

Model build_hawkes(ParamTable& p) {
  double lambda0 = p.number("lambda0");
  KernelSpec spec = parse_kernel(p);
  double t_max = p.number("t_max");
  Model m;
  m.stat_name = "rate";
  m.run = [=](std::uint64_t seed, int replica, const std::string& tag) {
    critlab::RngStream rng(seed, replica);
    critlab::EventSeries ev =
        critlab::simulate_hawkes(lambda0, spec.build(), t_max, rng);
    ReplicaFiles out;
    out.stat = static_cast<double>(ev.times.size()) / t_max;
    out.files.emplace_back("events" + tag + ".csv", critlab::to_csv(ev));
    return out;
  };
  return m;
}

Model build_model(const std::string& name, const json& params,
                  const ConfigFile& file) {
  ParamTable p(params, file, "params");
  Model m;
  if (name == "ou")
    m = build_ou(p);
  else if (name == "branching")
    m = build_branching(p);
  else if (name == "sweep")
    m = build_sweep(p);
  else if (name == "glv")
    m = build_glv(p);
  else if (name == "timeliness")
    m = build_timeliness(p);
  else if (name == "prodnet")
    m = build_prodnet(p);
  else if (name == "inflation")
    m = build_inflation(p);
  else if (name == "arch")
    m = build_arch(p);
  else if (name == "hawkes")
    m = build_hawkes(p);
  else
    throw ConfigError(file.anchor("model") + ": unknown model \"" + name +
                      "\"");
  p.finish();
  return m;
}

struct Experiment {
  std::string model;
  std::uint64_t seed = 0;
  int replicas = 1;
  std::string output_dir;
  json params;
};

Experiment parse_experiment(const ConfigFile& file,
                            const std::string& cli_outdir) {
  ParamTable top(file.root, file, "config");
  Experiment ex;
  ex.model = top.str("model");
  ex.seed = top.seed_value("seed");
  ex.replicas = static_cast<int>(top.integer("replicas", 1));
  if (ex.replicas < 1) top.fail("replicas", "replicas must be >= 1");
  ex.output_dir = top.str("output_dir", "");
  ex.params = top.object("params");
  top.finish();
  if (!cli_outdir.empty()) ex.output_dir = cli_outdir;
  if (ex.output_dir.empty())
    throw ConfigError(file.path +
                      ": output_dir missing (config key or --output-dir)");
  return ex;
}

struct OutputRecord {
  std::string path;  // relative to its manifest's directory
  std::uint64_t hash = 0;
};

// run jobs 0..n_jobs-1 on a small pool; first failure (by job index) wins
void run_jobs(int n_jobs, int threads,
              const std::function<void(int)>& job) {
  std::vector<std::string> errors(n_jobs);
  std::vector<int> codes(n_jobs, 0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int j = next.fetch_add(1);
      if (j >= n_jobs) return;
      try {
        job(j);
      } catch (const WriteError& e) {
        errors[j] = e.what();
        codes[j] = 1;
      } catch (const std::exception& e) {
        errors[j] = e.what();
        codes[j] = 3;
      }
    }
  };
  int n_threads = std::min(threads, n_jobs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int j = 0; j < n_jobs; ++j)
    if (codes[j] == 1)
      throw WriteError(errors[j]);
    else if (codes[j] != 0)
      throw ModelError(errors[j]);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WriteError("cannot write " + path.string());
  f << content;
  f.flush();
  if (!f) throw WriteError("write failed on " + path.string());
}

json outputs_json(std::vector<OutputRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const OutputRecord& a, const OutputRecord& b) {
              return a.path < b.path;
            });
  json arr = json::array();
  for (const auto& rec : records)
    arr.push_back({{"path", rec.path}, {"fnv1a64", hex64(rec.hash)}});
  return arr;
}

// one experiment into one directory; returns per-replica stats + records
struct RunProducts {
  std::vector<OutputRecord> outputs;
  std::vector<double> stats;
};

RunProducts run_experiment(const Model& model, std::uint64_t seed,
                           int replicas, const fs::path& dir, int threads) {
  fs::create_directories(dir);
  RunProducts products;
  products.stats.resize(replicas);
  std::vector<std::vector<OutputRecord>> records(replicas);
  run_jobs(replicas, threads, [&](int r) {
    std::string tag = replicas == 1 ? "" : "_r" + std::to_string(r);
    ReplicaFiles out = model.run(seed, r, tag);
    products.stats[r] = out.stat;
    for (auto& [name, content] : out.files) {
      write_file(dir / name, content);
      records[r].push_back({name, fnv1a64(content)});
    }
  });
  for (auto& recs : records)
    for (auto& rec : recs) products.outputs.push_back(std::move(rec));
  return products;
}

void write_manifest(const fs::path& dir, const json& config_echo,
                    const char* command, json outputs, double wall_seconds,
                    json extra = json::object()) {
  json manifest = {{"command", command},
                   {"config", config_echo},
                   {"outputs", std::move(outputs)},
                   {"version", kVersion},
                   {"wall_time_seconds", wall_seconds}};
  manifest.update(extra);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int cmd_run(const std::string& config_path, const std::string& cli_outdir,
            int threads) {
  ConfigFile file = load_config(config_path);
  Experiment ex = parse_experiment(file, cli_outdir);
  Model model = build_model(ex.model, ex.params, file);
  auto t0 = std::chrono::steady_clock::now();
  RunProducts products =
      run_experiment(model, ex.seed, ex.replicas, ex.output_dir, threads);
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  json echo = file.root;
  echo["output_dir"] = ex.output_dir;
  write_manifest(ex.output_dir, echo, "run",
                 outputs_json(std::move(products.outputs)), wall);
  return 0;
}

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) comma = csv.size();
    tokens.push_back(csv.substr(start, comma - start));
    start = comma + 1;
  }
  if (tokens.size() == 1 && tokens[0].empty()) tokens.clear();
  return tokens;
}

json parse_value_token(const std::string& token) {
  if (token.empty()) throw ConfigError("--values: empty value token");
  double value = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(),
                                 value);
  if (ec != std::errc() || p != token.data() + token.size())
    throw ConfigError("--values: \"" + token + "\" is not a number");
  bool integral = token.find_first_of(".eE") == std::string::npos;
  if (integral && value == std::floor(value) && std::abs(value) < 9.0e15)
    return json(static_cast<std::int64_t>(value));
  return json(value);
}

int cmd_scan(const std::string& config_path, const std::string& cli_outdir,
             int threads, const std::string& param,
             const std::string& values_csv) {
  ConfigFile file = load_config(config_path);
  Experiment ex = parse_experiment(file, cli_outdir);
  if (!ex.params.contains(param) || !ex.params.at(param).is_number())
    throw ConfigError(file.anchor("params") + ": scan parameter \"" + param +
                      "\" must name a numeric key in params");
  std::vector<std::string> tokens = split_values(values_csv);
  if (tokens.empty()) throw ConfigError("--values: list is empty");
  {
    std::set<std::string> unique(tokens.begin(), tokens.end());
    if (unique.size() != tokens.size())
      throw ConfigError("--values: duplicate value");
  }

  struct ValueRun {
    std::string token;
    std::uint64_t seed = 0;
    json params;
    fs::path dir;
    Model model;
  };
  std::vector<ValueRun> runs(tokens.size());
  fs::path outdir = ex.output_dir;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ValueRun& vr = runs[i];
    vr.token = tokens[i];
    vr.seed = critlab::derive_seed(ex.seed, i);
    vr.params = ex.params;
    vr.params[param] = parse_value_token(tokens[i]);
    vr.dir = outdir / (param + "=" + tokens[i]);
    vr.model = build_model(ex.model, vr.params, file);
    fs::create_directories(vr.dir);
  }

  int replicas = ex.replicas;
  int n_values = static_cast<int>(runs.size());
  std::vector<std::vector<OutputRecord>> records(n_values * replicas);
  std::vector<double> stats(n_values * replicas, 0.0);
  std::vector<double> job_seconds(n_values * replicas, 0.0);
  auto t0 = std::chrono::steady_clock::now();
  run_jobs(n_values * replicas, threads, [&](int j) {
    int v = j / replicas;
    int r = j % replicas;
    auto jt0 = std::chrono::steady_clock::now();
    std::string tag = replicas == 1 ? "" : "_r" + std::to_string(r);
    ReplicaFiles out = runs[v].model.run(runs[v].seed, r, tag);
    stats[j] = out.stat;
    for (auto& [name, content] : out.files) {
      write_file(runs[v].dir / name, content);
      records[j].push_back({name, fnv1a64(content)});
    }
    job_seconds[j] = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - jt0)
                         .count();
  });

  // per-value manifests mirror what `run` would have written for a config
  // with the derived seed and the injected parameter
  const std::string& stat_name = runs[0].model.stat_name;
  std::string summary = param + "," + stat_name + "\n";
  json runs_json = json::array();
  for (int v = 0; v < n_values; ++v) {
    std::vector<OutputRecord> value_outputs;
    double stat_sum = 0.0, value_wall = 0.0;
    for (int r = 0; r < replicas; ++r) {
      int j = v * replicas + r;
      for (auto& rec : records[j]) value_outputs.push_back(std::move(rec));
      stat_sum += stats[j];
      value_wall += job_seconds[j];
    }
    json echo = file.root;
    echo["seed"] = runs[v].seed;
    echo["params"] = runs[v].params;
    echo["output_dir"] = runs[v].dir.string();
    write_manifest(runs[v].dir, echo, "run",
                   outputs_json(std::move(value_outputs)), value_wall);
    summary += runs[v].token + "," + fmt_double(stat_sum / replicas) + "\n";
    runs_json.push_back({{"dir", runs[v].dir.filename().string()},
                         {"seed", runs[v].seed}});
  }
  write_file(outdir / "summary.csv", summary);
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  json echo = file.root;
  echo["output_dir"] = ex.output_dir;
  json extra = {{"param", param},
                {"values", tokens},
                {"runs", std::move(runs_json)}};
  write_manifest(outdir, echo, "scan",
                 outputs_json({{"summary.csv", fnv1a64(summary)}}), wall,
                 extra);
  return 0;
}

int default_threads() {
  const char* env = std::getenv("CRITLAB_THREADS");
  if (!env) return 1;
  int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-organized criticality experiment runner"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string config_path, outdir, param, values;
  int threads = default_threads();
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (json)")
        ->required();
    cmd->add_option("--output-dir", outdir, "override config output_dir");
    cmd->add_option("--threads", threads, "parallel replica workers")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run);
  CLI::App* scan =
      app.add_subcommand("scan", "run one experiment per parameter value");
  add_common(scan);
  scan->add_option("--param", param, "params key to sweep")->required();
  scan->add_option("--values", values, "comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, outdir, threads);
    return cmd_scan(config_path, outdir, threads, param, values);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
