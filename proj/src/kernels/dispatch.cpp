#include <cstdlib>
#include <string>

#include "growth/kernels.hpp"

namespace growth::kernels {

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool cpu_has_avx2() {
#if defined(GROWTH_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  static const Isa selected = [] {
    if (const char* env = std::getenv("GROWTH_SIMD"); env && std::string(env) == "scalar") {
      return Isa::scalar;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
  }();
  return selected;
}

#if defined(GROWTH_HAVE_AVX2)
#define GROWTH_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define GROWTH_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void circulant_conv(std::span<const double> padded, std::span<const double> taps,
                    std::span<double> out) {
  GROWTH_DISPATCH(circulant_conv, padded, taps, out);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return GROWTH_DISPATCH(dot, a, b);
}

void polar_distance2(std::span<const double> rho, std::span<const double> cx,
                     std::span<const double> cy, double px, double py,
                     std::span<double> out) {
  GROWTH_DISPATCH(polar_distance2, rho, cx, cy, px, py, out);
}

void pow_half(std::span<const double> d2, double half_power, std::span<double> out) {
  GROWTH_DISPATCH(pow_half, d2, half_power, out);
}

double min_segment_distance2(const SegmentSoA& seg, std::size_t begin, std::size_t end,
                             double px, double py) {
  return GROWTH_DISPATCH(min_segment_distance2, seg, begin, end, px, py);
}

#undef GROWTH_DISPATCH

}  // namespace growth::kernels
