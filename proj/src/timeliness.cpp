#include "critlab/timeliness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "critlab/analysis.hpp"
#include "critlab/csv.hpp"

namespace critlab {

namespace {

void check_noise(const DelayNoise& noise) {
  if (!(noise.mean > 0.0) || !std::isfinite(noise.mean))
    throw std::invalid_argument("DelayNoise: mean must be positive");
}

int uniform_index(RngStream& rng, int m) {
  return static_cast<int>(rng.uniform() * m);
}

// k distinct values from pool, by partial Fisher-Yates.
std::vector<int> sample_distinct(std::vector<int>& pool, int k,
                                 RngStream& rng) {
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    int pick = j + uniform_index(rng, static_cast<int>(pool.size()) - j);
    std::swap(pool[static_cast<std::size_t>(j)],
              pool[static_cast<std::size_t>(pick)]);
    out[static_cast<std::size_t>(j)] = pool[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace

void TaskNetwork::validate() const {
  if (n < 1) throw std::invalid_argument("TaskNetwork: need at least one node");
  if (predecessors.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("TaskNetwork: predecessor list size mismatch");
  for (int i = 0; i < n; ++i) {
    std::vector<int> seen;
    for (int j : predecessors[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= n)
        throw std::invalid_argument("TaskNetwork: predecessor out of range");
      if (j == i) throw std::invalid_argument("TaskNetwork: self-loop");
      seen.push_back(j);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw std::invalid_argument("TaskNetwork: duplicate predecessor");
  }
}

TaskNetwork chain_network(int n) {
  if (n < 2) throw std::invalid_argument("chain_network: need n >= 2");
  TaskNetwork net;
  net.n = n;
  net.kind = NetworkKind::chain;
  net.predecessors.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    net.predecessors[static_cast<std::size_t>(i)] = {(i + n - 1) % n};
  net.validate();
  return net;
}

TaskNetwork random_regular_network(int n, int k, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("random_regular_network: need n >= 2");
  if (k < 1 || k >= n)
    throw std::invalid_argument("random_regular_network: need 1 <= k < n");
  TaskNetwork net;
  net.n = n;
  net.kind = NetworkKind::random_regular;
  net.predecessors.resize(static_cast<std::size_t>(n));
  std::vector<int> pool(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    int w = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) pool[static_cast<std::size_t>(w++)] = j;
    net.predecessors[static_cast<std::size_t>(i)] =
        sample_distinct(pool, k, rng);
  }
  net.validate();
  return net;
}

TaskNetwork dag_layered_network(int n_layers, int width, int k,
                                RngStream& rng) {
  if (n_layers < 2)
    throw std::invalid_argument("dag_layered_network: need n_layers >= 2");
  if (width < 1) throw std::invalid_argument("dag_layered_network: width >= 1");
  if (k < 1 || k > width)
    throw std::invalid_argument("dag_layered_network: need 1 <= k <= width");
  TaskNetwork net;
  net.n = n_layers * width;
  net.kind = NetworkKind::dag_layered;
  net.predecessors.resize(static_cast<std::size_t>(net.n));
  std::vector<int> pool(static_cast<std::size_t>(width));
  for (int l = 1; l < n_layers; ++l) {
    for (int j = 0; j < width; ++j) {
      std::iota(pool.begin(), pool.end(), (l - 1) * width);
      net.predecessors[static_cast<std::size_t>(l * width + j)] =
          sample_distinct(pool, k, rng);
    }
  }
  net.validate();
  return net;
}

TaskNetwork network_from_csv(const std::string& text) {
  TaskNetwork net;
  net.kind = NetworkKind::custom;
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    return true;
  };
  std::string line;
  if (!next_line(line) || line != "src,dst")
    throw std::invalid_argument("network_from_csv: expected header src,dst");
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  while (next_line(line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("network_from_csv: malformed row");
    int src = 0, dst = 0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, src);
    auto r2 = std::from_chars(line.data() + comma + 1,
                              line.data() + line.size(), dst);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
        r1.ptr != line.data() + comma || r2.ptr != line.data() + line.size())
      throw std::invalid_argument("network_from_csv: malformed row");
    edges.emplace_back(src, dst);
    max_node = std::max({max_node, src, dst});
  }
  if (edges.empty())
    throw std::invalid_argument("network_from_csv: no edges");
  net.n = max_node + 1;
  net.predecessors.resize(static_cast<std::size_t>(net.n));
  for (auto [src, dst] : edges)
    net.predecessors[static_cast<std::size_t>(dst)].push_back(src);
  net.validate();
  return net;
}

std::string to_csv(const TaskNetwork& net) {
  std::string out = "src,dst\n";
  for (int i = 0; i < net.n; ++i) {
    for (int j : net.predecessors[static_cast<std::size_t>(i)]) {
      append_i64(out, j);
      out.push_back(',');
      append_i64(out, i);
      out.push_back('\n');
    }
  }
  return out;
}

namespace {

void check_step_args(const TaskNetwork& net, double buffer,
                     const DelayNoise& noise) {
  net.validate();
  check_noise(noise);
  if (!(buffer >= 0.0))
    throw std::invalid_argument("step_delays: buffer must be >= 0");
}

// Hot path, validation already done by the caller.
void step_into(const TaskNetwork& net, const DelayField& field, double buffer,
               const DelayNoise& noise, const RngStream& base,
               DelayField& next) {
  next.iteration = field.iteration + 1;
  next.tau.resize(net.n);
  RngStream step_rng =
      base.substream(static_cast<std::uint64_t>(next.iteration));
  for (int i = 0; i < net.n; ++i) {
    double eps = step_rng.exponential(noise.mean);
    const auto& preds = net.predecessors[static_cast<std::size_t>(i)];
    if (preds.empty()) {
      next.tau[i] = eps;
      continue;
    }
    double worst = 0.0;
    for (int j : preds) worst = std::max(worst, field.tau[j]);
    next.tau[i] = std::max(worst - buffer, 0.0) + eps;
  }
}

}  // namespace

DelayField step_delays(const TaskNetwork& net, const DelayField& field,
                       double buffer, const DelayNoise& noise,
                       const RngStream& base) {
  check_step_args(net, buffer, noise);
  if (field.tau.size() != net.n)
    throw std::invalid_argument("step_delays: field size mismatch");
  DelayField next;
  step_into(net, field, buffer, noise, base, next);
  return next;
}

Eigen::MatrixXd simulate_delays(const TaskNetwork& net, double buffer,
                                const DelayNoise& noise, int t_steps,
                                const RngStream& base) {
  check_step_args(net, buffer, noise);
  if (t_steps < 1)
    throw std::invalid_argument("simulate_delays: need t_steps >= 1");
  Eigen::MatrixXd tau(t_steps + 1, net.n);
  DelayField field, next;
  field.tau = Eigen::VectorXd::Zero(net.n);
  tau.row(0).setZero();
  for (int k = 1; k <= t_steps; ++k) {
    step_into(net, field, buffer, noise, base, next);
    std::swap(field, next);
    tau.row(k) = field.tau.transpose();
  }
  return tau;
}

double delay_drift(const TaskNetwork& net, double buffer,
                   const DelayNoise& noise, int t_steps,
                   const RngStream& base) {
  check_step_args(net, buffer, noise);
  if (t_steps < 4)
    throw std::invalid_argument("delay_drift: need t_steps >= 4");
  DelayField field, next;
  field.tau = Eigen::VectorXd::Zero(net.n);
  std::vector<double> step, mean;
  step.reserve(static_cast<std::size_t>(t_steps) / 2 + 1);
  mean.reserve(step.capacity());
  for (int k = 1; k <= t_steps; ++k) {
    step_into(net, field, buffer, noise, base, next);
    std::swap(field, next);
    if (k > t_steps / 2) {
      step.push_back(static_cast<double>(k));
      mean.push_back(field.tau.mean());
    }
  }
  return fit_line(step, mean).slope;
}

double find_critical_buffer(const TaskNetwork& net, const DelayNoise& noise,
                            double b_lo, double b_hi, const RngStream& base,
                            int t_steps) {
  check_noise(noise);
  if (!(b_lo >= 0.0) || !(b_hi > b_lo))
    throw std::invalid_argument("find_critical_buffer: bad range");
  // A healed run still shows a tiny slope of either sign, so "drifting"
  // means the slope clears the diffusive scale a critical run would show.
  double floor =
      0.5 * noise.mean / std::sqrt(static_cast<double>(t_steps - t_steps / 2));
  auto drifting = [&](double b) {
    return delay_drift(net, b, noise, t_steps, base) > floor;
  };
  if (!drifting(b_lo))
    throw std::invalid_argument(
        "find_critical_buffer: no drift at the low end, range does not "
        "bracket the transition");
  if (drifting(b_hi))
    throw std::invalid_argument(
        "find_critical_buffer: still drifting at the high end, range does "
        "not bracket the transition");
  double tol = 0.05 * noise.mean;
  while (b_hi - b_lo > tol) {
    double mid = 0.5 * (b_lo + b_hi);
    (drifting(mid) ? b_lo : b_hi) = mid;
  }
  return 0.5 * (b_lo + b_hi);
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t m) : parent(m) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

std::vector<DelayEpisode> extract_episodes(const TaskNetwork& net,
                                           const Eigen::MatrixXd& tau,
                                           double threshold) {
  net.validate();
  if (tau.cols() != net.n)
    throw std::invalid_argument("extract_episodes: column count mismatch");
  if (!(threshold > 0.0))
    throw std::invalid_argument("extract_episodes: threshold must be positive");

  const int rows = static_cast<int>(tau.rows());
  const int n = net.n;
  // Dense cell index over the hot cells only.
  std::vector<int> cell_id(static_cast<std::size_t>(rows) *
                               static_cast<std::size_t>(n),
                           -1);
  auto at = [&](int r, int i) -> int& {
    return cell_id[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(i)];
  };
  int n_hot = 0;
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < n; ++i)
      if (tau(r, i) > threshold) at(r, i) = n_hot++;

  UnionFind uf(static_cast<std::size_t>(n_hot));
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      int me = at(r, i);
      if (me < 0) continue;
      if (r + 1 < rows && at(r + 1, i) >= 0) uf.merge(me, at(r + 1, i));
      for (int j : net.predecessors[static_cast<std::size_t>(i)])
        if (at(r, j) >= 0) uf.merge(me, at(r, j));
    }
  }

  std::unordered_map<int, std::size_t> root_slot;
  std::vector<DelayEpisode> episodes;
  std::vector<int> stop;
  std::vector<std::vector<char>> touched;
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      int me = at(r, i);
      if (me < 0) continue;
      int root = uf.find(me);
      auto [it, fresh] = root_slot.try_emplace(root, episodes.size());
      if (fresh) {
        episodes.push_back({r, 0, 0, 0.0});
        stop.push_back(r);
        touched.emplace_back(static_cast<std::size_t>(n), 0);
      }
      std::size_t slot = it->second;
      auto& ep = episodes[slot];
      ep.size += tau(r, i) - threshold;
      stop[slot] = r;
      if (!touched[slot][static_cast<std::size_t>(i)]) {
        touched[slot][static_cast<std::size_t>(i)] = 1;
        ++ep.node_count;
      }
    }
  }
  for (std::size_t s = 0; s < episodes.size(); ++s)
    episodes[s].duration =
        stop[s] - static_cast<int>(episodes[s].start) + 1;
  std::sort(episodes.begin(), episodes.end(),
            [](const DelayEpisode& a, const DelayEpisode& b) {
              if (a.start != b.start) return a.start < b.start;
              return a.size > b.size;
            });
  return episodes;
}

std::vector<DelayEpisode> delay_avalanches(const TaskNetwork& net,
                                           double buffer,
                                           const DelayNoise& noise,
                                           int t_steps, const RngStream& base,
                                           double q_factor) {
  if (!(q_factor > 0.0))
    throw std::invalid_argument("delay_avalanches: q_factor must be positive");
  if (t_steps < 8)
    throw std::invalid_argument("delay_avalanches: run too short");
  Eigen::MatrixXd tau = simulate_delays(net, buffer, noise, t_steps, base);

  // Threshold calibrated on the first half so the scored window never sets
  // its own bar; on a healed run the first-half median is the stationary
  // median up to the short transient.
  const int calib_rows = t_steps / 2 + 1;
  std::vector<double> calib;
  calib.reserve(static_cast<std::size_t>(calib_rows) *
                static_cast<std::size_t>(net.n));
  for (int r = 0; r < calib_rows; ++r)
    for (int i = 0; i < net.n; ++i) calib.push_back(tau(r, i));
  auto mid = calib.begin() + static_cast<std::ptrdiff_t>(calib.size() / 2);
  std::nth_element(calib.begin(), mid, calib.end());
  double threshold = q_factor * *mid;
  if (!(threshold > 0.0))
    throw std::range_error("delay_avalanches: degenerate calibration median");

  Eigen::MatrixXd scored =
      tau.bottomRows(tau.rows() - calib_rows);
  auto episodes = extract_episodes(net, scored, threshold);
  for (auto& ep : episodes) ep.start += calib_rows;
  return episodes;
}

std::string delays_to_csv(const Eigen::MatrixXd& tau) {
  std::string out = "n,node,tau\n";
  for (Eigen::Index r = 0; r < tau.rows(); ++r) {
    for (Eigen::Index i = 0; i < tau.cols(); ++i) {
      append_i64(out, r);
      out.push_back(',');
      append_i64(out, i);
      out.push_back(',');
      append_double(out, tau(r, i));
      out.push_back('\n');
    }
  }
  return out;
}

void write_delays_csv(const Eigen::MatrixXd& tau, const std::string& path) {
  write_text_file(path, delays_to_csv(tau));
}

std::string to_csv(const std::vector<DelayEpisode>& episodes) {
  std::string out = "start,duration,nodes,size\n";
  for (const auto& ep : episodes) {
    append_i64(out, ep.start);
    out.push_back(',');
    append_i64(out, ep.duration);
    out.push_back(',');
    append_i64(out, ep.node_count);
    out.push_back(',');
    append_double(out, ep.size);
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::vector<DelayEpisode>& episodes,
               const std::string& path) {
  write_text_file(path, to_csv(episodes));
}

}  // namespace critlab
