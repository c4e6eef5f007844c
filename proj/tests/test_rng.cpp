#include <doctest.h>

#include <cmath>

#include "rpp/rng.hpp"

using namespace rpp;

TEST_CASE("substreams are deterministic and channel-separated") {
  SubstreamRng a(substream_key(42, 3, 7, 0));
  SubstreamRng b(substream_key(42, 3, 7, 0));
  SubstreamRng c(substream_key(42, 3, 7, 1));
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("uniform01 stays in [0,1) and is roughly centered") {
  SubstreamRng rng(substream_key(1, 0, 0, 0));
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.02);
}

TEST_CASE("gaussian moments") {
  SubstreamRng rng(substream_key(2, 0, 0, 0));
  double sum = 0, sq = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("unit sphere draws have unit norm") {
  SubstreamRng rng(substream_key(3, 1, 2, 1));
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd u = rng.unit_sphere(7);
    CHECK(std::abs(u.norm() - 1.0) < 1e-12);
  }
}
