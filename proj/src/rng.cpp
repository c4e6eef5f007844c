#include "rpp/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rpp {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kK0 = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kK1 = 0x8CB92BA72F3D8DD7ULL;
constexpr std::uint64_t kK2 = 0xABCC5167CCAD925FULL;
constexpr std::uint64_t kK3 = 0x9216D5D98979FB1BULL;

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t substream_key(std::uint64_t seed, std::uint64_t node,
                            std::uint64_t k, std::uint64_t channel) {
  std::uint64_t h = mix(seed ^ kK0);
  h = mix(h ^ (node + 1) * kK1);
  h = mix(h ^ (k + 1) * kK2);
  return mix(h ^ channel * kK3);
}

std::uint64_t SubstreamRng::next_u64() {
  state_ += kGamma;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SubstreamRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SubstreamRng::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd SubstreamRng::unit_sphere(int dim) {
  if (dim <= 0) throw std::invalid_argument("unit_sphere: dim must be >= 1");
  Eigen::VectorXd v(dim);
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < dim; ++i) v[i] = gaussian();
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
  throw std::runtime_error("unit_sphere: degenerate draw");
}

}  // namespace rpp
