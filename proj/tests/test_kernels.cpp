#include <cmath>
#include <vector>

#include "doctest.h"
#include "growth/kernels.hpp"
#include "growth/rng.hpp"

using namespace growth;

namespace {

std::vector<double> random_vec(Stream& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("dispatch reports a usable variant") {
    const auto isa = kernels::active_isa();
    CHECK((isa == kernels::Isa::scalar || kernels::cpu_has_avx2()));
    CHECK(!kernels::isa_name(isa).empty());
  }

  TEST_CASE("avx2 matches scalar on every kernel") {
    if (!kernels::cpu_has_avx2()) return;
    Stream rng(11);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 13u, 64u, 1023u}) {
      CAPTURE(n);
      const auto a = random_vec(rng, n, -2, 2);
      const auto b = random_vec(rng, n, -2, 2);
      CHECK(rel(kernels::avx2::dot(a, b), kernels::scalar::dot(a, b)) < 1e-13);

      for (std::size_t K : {0u, 1u, 5u, 17u}) {
        const auto taps = random_vec(rng, 2 * K + 1, 0, 1);
        const auto padded = random_vec(rng, n + 2 * K, -1, 1);
        std::vector<double> o1(n), o2(n);
        kernels::scalar::circulant_conv(padded, taps, o1);
        kernels::avx2::circulant_conv(padded, taps, o2);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel(o2[i], o1[i]) < 1e-13);
      }

      const auto rho = random_vec(rng, n, 0.5, 2);
      const auto ang = random_vec(rng, n, 0, 6.283185307179586);
      std::vector<double> cx(n), cy(n);
      for (std::size_t i = 0; i < n; ++i) {
        cx[i] = std::cos(ang[i]);
        cy[i] = std::sin(ang[i]);
      }
      std::vector<double> d1(n), d2(n);
      kernels::scalar::polar_distance2(rho, cx, cy, 0.1, -0.2, d1);
      kernels::avx2::polar_distance2(rho, cx, cy, 0.1, -0.2, d2);
      for (std::size_t i = 0; i < n; ++i) CHECK(rel(d2[i], d1[i]) < 1e-13);

      for (double hp : {-0.5, -1.0, 0.0, 0.75, -1.5}) {
        std::vector<double> p1(n), p2(n);
        kernels::scalar::pow_half(d1, hp, p1);
        kernels::avx2::pow_half(d1, hp, p2);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel(p2[i], p1[i]) < 1e-13);
      }

      if (n > 0) {
        const auto ax = random_vec(rng, n, -1, 1), ay = random_vec(rng, n, -1, 1);
        const auto dx = random_vec(rng, n, -0.3, 0.3), dy = random_vec(rng, n, -0.3, 0.3);
        std::vector<double> inv(n);
        for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / (dx[i] * dx[i] + dy[i] * dy[i]);
        inv[0] = 0.0;  // degenerate segment path
        const kernels::SegmentSoA seg{ax, ay, dx, dy, inv};
        const double s1 = kernels::scalar::min_segment_distance2(seg, 0, n, 0.05, 0.02);
        const double s2 = kernels::avx2::min_segment_distance2(seg, 0, n, 0.05, 0.02);
        CHECK(rel(s2, s1) < 1e-13);
        if (n > 3) CHECK(kernels::avx2::min_segment_distance2(seg, 1, n - 1, 0.3, 0.3) ==
                         doctest::Approx(kernels::scalar::min_segment_distance2(seg, 1, n - 1, 0.3, 0.3)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("segment distance against a brute-force projection") {
    const std::vector<double> ax{0.0}, ay{0.0}, dx{1.0}, dy{0.0}, inv{1.0};
    const kernels::SegmentSoA seg{ax, ay, dx, dy, inv};
    CHECK(kernels::min_segment_distance2(seg, 0, 1, 0.5, 2.0) == doctest::Approx(4.0));
    CHECK(kernels::min_segment_distance2(seg, 0, 1, -1.0, 0.0) == doctest::Approx(1.0));
    CHECK(kernels::min_segment_distance2(seg, 0, 1, 2.0, 1.0) == doctest::Approx(2.0));
  }
}
