#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "critlab/rng.hpp"

namespace critlab {

enum class NetworkKind { chain, random_regular, dag_layered, custom };

// Dependency wiring for a set of recurring tasks. predecessors[i] lists the
// tasks that must finish before task i can start; a node with no
// predecessors is a source and runs on schedule apart from its own noise.
struct TaskNetwork {
  int n = 0;
  std::vector<std::vector<int>> predecessors;
  NetworkKind kind = NetworkKind::custom;

  void validate() const;
};

// Closed loop of n tasks, each waiting on the previous one. The loop keeps
// delays circulating instead of washing out at a fixed depth, which is what
// gives the buffer a genuine critical point.
TaskNetwork chain_network(int n);

// Every node waits on k distinct others, chosen uniformly at random.
TaskNetwork random_regular_network(int n, int k, RngStream& rng);

// n_layers * width nodes; layer zero is all sources, each later node waits
// on k random nodes from the layer above.
TaskNetwork dag_layered_network(int n_layers, int width, int k,
                                RngStream& rng);

// Parses an edge list with header "src,dst"; node count is one past the
// largest index seen.
TaskNetwork network_from_csv(const std::string& text);
std::string to_csv(const TaskNetwork& net);

// Per-task noise: exponential with the given mean, drawn fresh for every
// (iteration, node) pair from a counter-keyed stream so that runs replay
// identically under any buffer value.
struct DelayNoise {
  double mean = 1.0;
};

struct DelayField {
  Eigen::VectorXd tau;
  std::int64_t iteration = 0;
};

// One synchronous update: tau_i <- [max over predecessors of tau_j - B]+
// plus fresh noise; sources carry noise only. The noise for iteration k is a
// pure function of (base, k), independent of B.
DelayField step_delays(const TaskNetwork& net, const DelayField& field,
                       double buffer, const DelayNoise& noise,
                       const RngStream& base);

// Full trajectory from tau = 0: row k holds tau(k), so the matrix is
// (t_steps + 1) x n.
Eigen::MatrixXd simulate_delays(const TaskNetwork& net, double buffer,
                                const DelayNoise& noise, int t_steps,
                                const RngStream& base);

// Slope of the node-averaged delay over the second half of a run; positive
// means delays are still accumulating, zero or negative means the buffer
// absorbs them.
double delay_drift(const TaskNetwork& net, double buffer,
                   const DelayNoise& noise, int t_steps,
                   const RngStream& base);

// Bisection on the drift verdict: a run counts as drifting when its slope
// clears the diffusive noise floor a marginal run would show. The range
// must straddle the transition: drift at b_lo, none at b_hi. Returns the
// midpoint of the final bracket, tightened to 0.05 times the noise mean.
double find_critical_buffer(const TaskNetwork& net, const DelayNoise& noise,
                            double b_lo, double b_hi, const RngStream& base,
                            int t_steps = 20000);

// Contiguous region of the space-time delay record above a threshold.
// Cells join along time on one node and across network links within one
// iteration. size is the delay mass above the threshold.
struct DelayEpisode {
  std::int64_t start = 0;
  int duration = 0;
  int node_count = 0;
  double size = 0.0;
};

std::vector<DelayEpisode> extract_episodes(const TaskNetwork& net,
                                           const Eigen::MatrixXd& tau,
                                           double threshold);

// Runs the field, calibrates the threshold at q_factor times the median
// delay over the first half, and extracts episodes from the second half.
std::vector<DelayEpisode> delay_avalanches(const TaskNetwork& net,
                                           double buffer,
                                           const DelayNoise& noise,
                                           int t_steps, const RngStream& base,
                                           double q_factor = 3.0);

// Layout: "n,node,tau" per cell.
std::string delays_to_csv(const Eigen::MatrixXd& tau);
void write_delays_csv(const Eigen::MatrixXd& tau, const std::string& path);

std::string to_csv(const std::vector<DelayEpisode>& episodes);
void write_csv(const std::vector<DelayEpisode>& episodes,
               const std::string& path);

}  // namespace critlab
