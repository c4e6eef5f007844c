#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace rpp {

/// Counter-based random substreams built on splitmix64.
///
/// Replay contract (kept bit-stable so alternate implementations can
/// reproduce traces):
///   key        = mix(mix(mix(seed ^ K0) ^ (node+1)*K1) ^ (k+1)*K2) ^ channel*K3, mixed once more
///   stream     = splitmix64 sequence started at that key
///   uniform01  = (next_u64 >> 11) * 2^-53                       in [0, 1)
///   gaussian   = Box-Muller: sqrt(-2 ln u1) * cos(2 pi u2) with u1 in (0,1]
///   unit sphere= dim gaussians, normalised (redrawn if the norm underflows)
/// where mix() is the splitmix64 finalizer and K0..K3 are the constants in
/// rng.cpp. Channel 0 carries the e-perturbations, channel 1 the r ones.
class SubstreamRng {
 public:
  explicit SubstreamRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64();
  double uniform01();
  double gaussian();
  Eigen::VectorXd unit_sphere(int dim);

 private:
  std::uint64_t state_;
};

/// Derives the substream key for one (seed, node, iteration, channel) draw.
std::uint64_t substream_key(std::uint64_t seed, std::uint64_t node,
                            std::uint64_t k, std::uint64_t channel);

}  // namespace rpp
