#include "growth/shapes.hpp"

#include <cmath>
#include <numbers>

#include "growth/errors.hpp"
#include "growth/rng.hpp"

namespace growth {

namespace {
double azimuth(const Vec& z) { return std::atan2(z[1], z[0]); }
}  // namespace

RadialField ball_shape(GridPtr grid, double radius) {
  if (!(radius > 0)) throw InvalidArgument("ball radius must be positive");
  return RadialField(std::move(grid), radius);
}

RadialField sunflower_shape(GridPtr grid, int k, double amp) {
  if (!(std::abs(amp) < 1)) throw InvalidArgument("sunflower amplitude must lie in (-1, 1)");
  return RadialField::from_function(std::move(grid), [&](const Vec& z) { return 1.0 + amp * std::cos(k * azimuth(z)); });
}

RadialField ellipse_shape(GridPtr grid, double b) {
  if (!(b > 0)) throw InvalidArgument("ellipse axis must be positive");
  return RadialField::from_function(std::move(grid), [&](const Vec& z) {
    const double a = azimuth(z);
    const double c = std::cos(a), s = std::sin(a);
    return 1.0 / std::sqrt(c * c + b * b * s * s);
  });
}

RadialField random_shape(GridPtr grid, std::uint64_t seed, int modes, double amplitude) {
  Stream rng(seed, "shape");
  std::vector<double> ca(modes), sa(modes);
  for (int m = 0; m < modes; ++m) {
    ca[m] = (2 * rng.uniform() - 1) * amplitude / (m + 1);
    sa[m] = (2 * rng.uniform() - 1) * amplitude / (m + 1);
  }
  const double tilt = 2 * rng.uniform() - 1;
  return RadialField::from_function(std::move(grid), [&](const Vec& z) {
    const double a = azimuth(z);
    double s = 0.1 * amplitude * tilt * z[2];
    for (int m = 0; m < modes; ++m) s += ca[m] * std::cos((m + 1) * a) + sa[m] * std::sin((m + 1) * a);
    return std::exp(s);
  });
}

RadialField shape_from_json(const nlohmann::json& spec, GridPtr grid) {
  if (spec.is_string()) return shape_from_json(nlohmann::json{{"name", spec}}, std::move(grid));
  if (!spec.is_object() || !spec.contains("name")) throw ConfigError("shape: expected a name");
  const std::string name = spec.at("name").get<std::string>();
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, v] : spec.items()) {
      bool ok = key == "name" || key == "scale";
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) throw ConfigError("shape " + name + ": unknown key '" + key + "'");
    }
  };
  RadialField r;
  if (name == "ball") {
    allow({"radius"});
    r = ball_shape(grid, spec.value("radius", 1.0));
  } else if (name == "sunflower") {
    allow({"k", "amp"});
    r = sunflower_shape(grid, spec.value("k", 6), spec.value("amp", 0.3));
  } else if (name == "ellipse") {
    allow({"b"});
    r = ellipse_shape(grid, spec.value("b", 2.0));
  } else if (name == "random") {
    allow({"seed", "modes", "amplitude"});
    r = random_shape(grid, spec.value("seed", std::uint64_t{1}), spec.value("modes", 6), spec.value("amplitude", 0.3));
  } else {
    throw ConfigError("unknown shape '" + name + "'");
  }
  if (spec.contains("scale")) r = r.scaled(spec.at("scale").get<double>());
  return r;
}

RadialField with_volume(const RadialField& r, double target) {
  if (!(target > 0)) throw InvalidArgument("target volume must be positive");
  return r.scaled(std::pow(target / leb_volume(r), 1.0 / r.grid().dim()));
}

}  // namespace growth
