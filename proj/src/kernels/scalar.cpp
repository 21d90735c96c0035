#include "growth/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace growth::kernels::scalar {

void circulant_conv(std::span<const double> padded, std::span<const double> taps,
                    std::span<double> out) {
  const std::size_t width = taps.size();
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < width; ++m) {
      // tap index m corresponds to offset (m - half); source is i - offset
      acc += taps[m] * padded[i + 2 * half - m];
    }
    out[i] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void polar_distance2(std::span<const double> rho, std::span<const double> cx,
                     std::span<const double> cy, double px, double py,
                     std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ex = rho[i] * cx[i] - px;
    const double ey = rho[i] * cy[i] - py;
    out[i] = ex * ex + ey * ey;
  }
}

void pow_half(std::span<const double> d2, double half_power, std::span<double> out) {
  if (half_power == -0.5) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / std::sqrt(d2[i]);
  } else if (half_power == -1.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / d2[i];
  } else if (half_power == 0.0) {
    std::fill(out.begin(), out.end(), 1.0);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(d2[i], half_power);
  }
}

double min_segment_distance2(const SegmentSoA& seg, std::size_t begin, std::size_t end,
                             double px, double py) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = begin; k < end; ++k) {
    const double qx = px - seg.ax[k];
    const double qy = py - seg.ay[k];
    double t = (qx * seg.dx[k] + qy * seg.dy[k]) * seg.inv_len2[k];
    t = std::clamp(t, 0.0, 1.0);
    const double ex = qx - t * seg.dx[k];
    const double ey = qy - t * seg.dy[k];
    best = std::min(best, ex * ex + ey * ey);
  }
  return best;
}

}  // namespace growth::kernels::scalar
