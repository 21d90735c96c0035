#pragma once
// Data-parallel inner loops used by the sphere, rules and ODE modules.
//
// Each kernel has a scalar reference implementation and an AVX2+FMA variant.
// The free functions in `growth::kernels` dispatch once, at first use, to the
// best variant the CPU supports. Setting GROWTH_SIMD=scalar in the environment
// pins the scalar path (useful when bisecting numerical differences).

#include <cstddef>
#include <span>
#include <string_view>

namespace growth::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True when the running CPU can execute the AVX2 variants.
bool cpu_has_avx2();

// The variant selected for this process (fixed after the first call).
Isa active_isa();

// Segments of a closed polyline in structure-of-arrays form.
// Segment k runs from (ax[k], ay[k]) to (ax[k]+dx[k], ay[k]+dy[k]);
// inv_len2[k] = 1/(dx^2+dy^2), or 0 for a degenerate segment.
struct SegmentSoA {
  std::span<const double> ax, ay, dx, dy, inv_len2;
};

#define GROWTH_KERNEL_DECLS                                                    \
  /* out[i] = sum_{m=-K..K} taps[m+K] * padded[i - m + K], i in [0, out.size()) \
     where padded has out.size() + 2K entries (periodic extension). */        \
  void circulant_conv(std::span<const double> padded,                          \
                      std::span<const double> taps, std::span<double> out);    \
  double dot(std::span<const double> a, std::span<const double> b);            \
  /* out[i] = |rho[i]*(cx[i],cy[i]) - (px,py)|^2 */                             \
  void polar_distance2(std::span<const double> rho, std::span<const double> cx, \
                       std::span<const double> cy, double px, double py,       \
                       std::span<double> out);                                 \
  /* out[i] = d2[i]^(half_power) */                                             \
  void pow_half(std::span<const double> d2, double half_power,                 \
                std::span<double> out);                                        \
  double min_segment_distance2(const SegmentSoA& seg, std::size_t begin,       \
                               std::size_t end, double px, double py);

namespace scalar {
GROWTH_KERNEL_DECLS
}  // namespace scalar

namespace avx2 {
GROWTH_KERNEL_DECLS
}  // namespace avx2

GROWTH_KERNEL_DECLS

#undef GROWTH_KERNEL_DECLS

}  // namespace growth::kernels
