#pragma once

#include <cstdint>

namespace critlab {

// Counter-based random stream. Draw k of stream s under master seed m is a
// pure function of (m, s, k), so results are reproducible under any draw
// schedule: replicas can run in parallel, be reordered, or be recomputed in
// isolation without changing a single bit of output.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_index() const { return stream_; }

  // Stream keyed by (this stream, tag); used when a simulation needs an
  // independent lane of draws per replica or per scan point.
  RngStream substream(std::uint64_t tag) const;

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); never returns 0 or 1, so logs of
  // uniforms are always finite.
  double uniform();

  // Standard Gaussian via Box-Muller (two uniforms per variate).
  double normal();

  // Exponential with the given mean.
  double exponential(double mean);

  // Poisson; exact for any mean (inversion by products below 10, transformed
  // rejection above).
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uint64_t master_;
  std::uint64_t stream_;
};

// Derived master seed for scan points and similar fan-outs; mixes so that
// nearby indices give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace critlab
