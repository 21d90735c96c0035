#pragma once
// Named initial shapes: ball, sunflower, ellipse and random Fourier shapes.

#include "growth/sphere.hpp"
#include "json.hpp"

namespace growth {

RadialField ball_shape(GridPtr grid, double radius = 1.0);
// 1 + amp cos(k theta); n = 2 uses the polar angle, n = 3 the azimuth.
RadialField sunflower_shape(GridPtr grid, int k, double amp);
// 1 / sqrt(cos^2 theta + b^2 sin^2 theta)
RadialField ellipse_shape(GridPtr grid, double b);
// exp of a random low-order Fourier series with the given amplitude; always positive.
RadialField random_shape(GridPtr grid, std::uint64_t seed, int modes = 6, double amplitude = 0.3);

// {"name": "ball"|"sunflower"|"ellipse"|"random", ...parameters}, or just the name.
RadialField shape_from_json(const nlohmann::json& spec, GridPtr grid);

// c r with Leb(c r) = target.
RadialField with_volume(const RadialField& r, double target);

}  // namespace growth
