#pragma once
// Brownian exit sampling from planar star-shaped domains by walk-on-spheres.

#include <cstddef>
#include <vector>

#include "growth/kernels.hpp"
#include "growth/rng.hpp"
#include "growth/sphere.hpp"

namespace growth {

// Closed polygon through the points rho_j * theta_j of a circle-grid field, with
// segments grouped into fixed-size chunks bounded by discs so that distance
// queries only touch the chunks that can hold the minimum.
class Polygon {
 public:
  explicit Polygon(const RadialField& rho);

  // Euclidean distance from p to the polygon boundary.
  double distance(const Vec& p) const;

  std::size_t segment_count() const { return ax_.size(); }

 private:
  static constexpr std::size_t kChunk = 16;
  std::vector<double> ax_, ay_, dx_, dy_, inv_len2_;
  std::vector<double> cx_, cy_, crad_;  // chunk bounding discs
  kernels::SegmentSoA soa() const;
};

struct WosExit {
  Vec direction;       // unit vector of the absorbed point
  std::size_t steps = 0;
};

// Runs one walk from `start` (inside the polygon) until it comes within `shell`
// of the boundary; the exit angle is the radial projection of the absorbed point.
WosExit walk_on_spheres(const Polygon& polygon, const Vec& start, double shell, Stream& rng,
                        std::size_t max_steps = 1'000'000);

}  // namespace growth
