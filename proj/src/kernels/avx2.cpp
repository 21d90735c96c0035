// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "growth/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace growth::kernels::avx2 {

namespace {
inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}
}  // namespace

void circulant_conv(std::span<const double> padded, std::span<const double> taps,
                    std::span<double> out) {
  const std::size_t width = taps.size();
  const std::size_t half = width / 2;
  const std::size_t n = out.size();
  std::size_t i = 0;
  // four independent chains hide the FMA latency; each output still sums in tap order
  for (; i + 16 <= n; i += 16) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    for (std::size_t m = 0; m < width; ++m) {
      const __m256d t = _mm256_broadcast_sd(&taps[m]);
      const double* src = &padded[i + 2 * half - m];
      a0 = _mm256_fmadd_pd(t, _mm256_loadu_pd(src), a0);
      a1 = _mm256_fmadd_pd(t, _mm256_loadu_pd(src + 4), a1);
      a2 = _mm256_fmadd_pd(t, _mm256_loadu_pd(src + 8), a2);
      a3 = _mm256_fmadd_pd(t, _mm256_loadu_pd(src + 12), a3);
    }
    _mm256_storeu_pd(&out[i], a0);
    _mm256_storeu_pd(&out[i + 4], a1);
    _mm256_storeu_pd(&out[i + 8], a2);
    _mm256_storeu_pd(&out[i + 12], a3);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t m = 0; m < width; ++m) {
      const __m256d t = _mm256_broadcast_sd(&taps[m]);
      const __m256d f = _mm256_loadu_pd(&padded[i + 2 * half - m]);
      acc = _mm256_fmadd_pd(t, f, acc);
    }
    _mm256_storeu_pd(&out[i], acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < width; ++m) acc = std::fma(taps[m], padded[i + 2 * half - m], acc);
    out[i] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
  return acc;
}

void polar_distance2(std::span<const double> rho, std::span<const double> cx,
                     std::span<const double> cy, double px, double py,
                     std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d vx = _mm256_set1_pd(px);
  const __m256d vy = _mm256_set1_pd(py);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_loadu_pd(&rho[i]);
    const __m256d ex = _mm256_fmsub_pd(r, _mm256_loadu_pd(&cx[i]), vx);
    const __m256d ey = _mm256_fmsub_pd(r, _mm256_loadu_pd(&cy[i]), vy);
    _mm256_storeu_pd(&out[i], _mm256_fmadd_pd(ex, ex, _mm256_mul_pd(ey, ey)));
  }
  for (; i < n; ++i) {
    const double ex = rho[i] * cx[i] - px;
    const double ey = rho[i] * cy[i] - py;
    out[i] = ex * ex + ey * ey;
  }
}

void pow_half(std::span<const double> d2, double half_power, std::span<double> out) {
  const std::size_t n = out.size();
  if (half_power == -0.5 || half_power == -1.0) {
    const __m256d one = _mm256_set1_pd(1.0);
    const bool root = half_power == -0.5;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(&d2[i]);
      if (root) v = _mm256_sqrt_pd(v);
      _mm256_storeu_pd(&out[i], _mm256_div_pd(one, v));
    }
    for (; i < n; ++i) out[i] = root ? 1.0 / std::sqrt(d2[i]) : 1.0 / d2[i];
    return;
  }
  // No vector pow in the toolchain; the scalar path is the reference here.
  scalar::pow_half(d2, half_power, out);
}

double min_segment_distance2(const SegmentSoA& seg, std::size_t begin, std::size_t end,
                             double px, double py) {
  const __m256d vx = _mm256_set1_pd(px);
  const __m256d vy = _mm256_set1_pd(py);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t k = begin;
  for (; k + 4 <= end; k += 4) {
    const __m256d qx = _mm256_sub_pd(vx, _mm256_loadu_pd(&seg.ax[k]));
    const __m256d qy = _mm256_sub_pd(vy, _mm256_loadu_pd(&seg.ay[k]));
    const __m256d dx = _mm256_loadu_pd(&seg.dx[k]);
    const __m256d dy = _mm256_loadu_pd(&seg.dy[k]);
    __m256d t = _mm256_mul_pd(_mm256_fmadd_pd(qx, dx, _mm256_mul_pd(qy, dy)),
                              _mm256_loadu_pd(&seg.inv_len2[k]));
    t = _mm256_min_pd(_mm256_max_pd(t, zero), one);
    const __m256d ex = _mm256_fnmadd_pd(t, dx, qx);
    const __m256d ey = _mm256_fnmadd_pd(t, dy, qy);
    best = _mm256_min_pd(best, _mm256_fmadd_pd(ex, ex, _mm256_mul_pd(ey, ey)));
  }
  double b = hmin(best);
  if (k < end) b = std::min(b, scalar::min_segment_distance2(seg, k, end, px, py));
  return b;
}

}  // namespace growth::kernels::avx2
