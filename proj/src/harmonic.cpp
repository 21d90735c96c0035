#include "growth/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "growth/errors.hpp"

namespace growth {

Polygon::Polygon(const RadialField& rho) {
  const SphereGrid& g = rho.grid();
  if (g.dim() != 2) throw InvalidArgument("Polygon: walk-on-spheres is implemented for n = 2 only");
  const std::size_t M = g.size();
  ax_.resize(M);
  ay_.resize(M);
  dx_.resize(M);
  dy_.resize(M);
  inv_len2_.resize(M);
  for (std::size_t j = 0; j < M; ++j) {
    const std::size_t k = (j + 1) % M;
    ax_[j] = rho[j] * g.node(j)[0];
    ay_[j] = rho[j] * g.node(j)[1];
    dx_[j] = rho[k] * g.node(k)[0] - ax_[j];
    dy_[j] = rho[k] * g.node(k)[1] - ay_[j];
    const double len2 = dx_[j] * dx_[j] + dy_[j] * dy_[j];
    inv_len2_[j] = len2 > 0 ? 1.0 / len2 : 0.0;
  }
  for (std::size_t b = 0; b < M; b += kChunk) {
    const std::size_t e = std::min(M, b + kChunk);
    double x = 0, y = 0;
    for (std::size_t j = b; j < e; ++j) {
      x += ax_[j];
      y += ay_[j];
    }
    x /= static_cast<double>(e - b);
    y /= static_cast<double>(e - b);
    double rad = 0;
    for (std::size_t j = b; j < e; ++j) {
      rad = std::max(rad, std::hypot(ax_[j] - x, ay_[j] - y));
      rad = std::max(rad, std::hypot(ax_[j] + dx_[j] - x, ay_[j] + dy_[j] - y));
    }
    cx_.push_back(x);
    cy_.push_back(y);
    crad_.push_back(rad);
  }
}

kernels::SegmentSoA Polygon::soa() const { return {ax_, ay_, dx_, dy_, inv_len2_}; }

double Polygon::distance(const Vec& p) const {
  const std::size_t chunks = cx_.size();
  const std::size_t M = ax_.size();
  // lower bounds per chunk; visit the most promising first
  double lb_best = std::numeric_limits<double>::infinity();
  std::size_t first = 0;
  thread_local std::vector<double> lower;
  lower.resize(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    lower[c] = std::max(0.0, std::hypot(p[0] - cx_[c], p[1] - cy_[c]) - crad_[c]);
    if (lower[c] < lb_best) {
      lb_best = lower[c];
      first = c;
    }
  }
  const auto seg = soa();
  double best2 = kernels::min_segment_distance2(seg, first * kChunk, std::min(M, (first + 1) * kChunk),
                                                p[0], p[1]);
  for (std::size_t c = 0; c < chunks; ++c) {
    if (c == first || lower[c] * lower[c] >= best2) continue;
    best2 = std::min(best2, kernels::min_segment_distance2(seg, c * kChunk, std::min(M, (c + 1) * kChunk),
                                                           p[0], p[1]));
  }
  return std::sqrt(best2);
}

WosExit walk_on_spheres(const Polygon& polygon, const Vec& start, double shell, Stream& rng,
                        std::size_t max_steps) {
  Vec x = start;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const double d = polygon.distance(x);
    if (d < shell) {
      const double len = norm(x);
      if (len == 0.0) throw DegenerateDomain("walk_on_spheres: absorbed at the origin");
      return {scaled(x, 1.0 / len), step};
    }
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    x[0] += d * std::cos(a);
    x[1] += d * std::sin(a);
  }
  throw GrowthError("walk_on_spheres: walk did not reach the boundary shell");
}

}  // namespace growth
