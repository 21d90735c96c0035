#include "growth/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "growth/config.hpp"
#include "growth/errors.hpp"
#include "growth/io.hpp"
#include "growth/kernels.hpp"

namespace growth {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInteriorMargin = 1e-6;  // relative to max r~

double norm_ratio(const Vec& xi, NormKind kind) {
  const double l2 = norm(xi);
  if (kind == NormKind::l1) return (std::abs(xi[0]) + std::abs(xi[1]) + std::abs(xi[2])) / l2;
  return std::max({std::abs(xi[0]), std::abs(xi[1]), std::abs(xi[2])}) / l2;
}

void normalize_density(std::vector<double>& f, const SphereGrid& g) {
  double total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) total += f[j] * g.weight(j);
  if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateDomain("hitting density has no mass");
  for (double& v : f) v /= total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rule metadata

double DistancePowerHit::phi(double t) const {
  if (is_power()) return std::pow(t, beta);
  if (t <= table_t.front()) return table_v.front();
  if (t >= table_t.back()) return table_v.back();
  const auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - table_t.begin());
  const double f = (t - table_t[k - 1]) / (table_t[k] - table_t[k - 1]);
  return table_v[k - 1] + f * (table_v[k] - table_v[k - 1]);
}

bool RuleSet::scale_invariant() const {
  const bool f_ok = std::visit(overloaded{[](const DistancePowerHit& d) { return d.is_power(); },
                                          [](const auto&) { return true; }},
                               F);
  const bool h_ok = std::visit(overloaded{[](const ToOrigin&) { return true; },
                                          [](const GammaLinear&) { return true; },
                                          [](const RadialPull& p) { return p.linear_in_length; },
                                          [](const NormScaledPull&) { return true; },
                                          [](const StatisticalCenter&) { return true; },
                                          [](const auto&) { return false; }},
                               H);
  return f_ok && h_ok;
}

std::string hitting_name(const HittingRule& F) {
  return std::visit(overloaded{[](const UniformHit&) { return std::string("uniform"); },
                               [](const BoundaryProportionalHit&) { return std::string("boundary-proportional"); },
                               [](const DistancePowerHit&) { return std::string("distance-power"); },
                               [](const HarmonicBallHit&) { return std::string("harmonic-exact-ball"); },
                               [](const HarmonicMcHit&) { return std::string("harmonic-mc"); }},
                    F);
}

std::string transport_name(const TransportRule& H) {
  return std::visit(
      overloaded{[](const ToOrigin&) { return std::string("origin"); },
                 [](const GammaLinear&) { return std::string("gamma-linear"); },
                 [](const RadialPull& p) { return "radial-pull:" + p.name; },
                 [](const UnitPull&) { return std::string("unit-pull"); },
                 [](const NormPull& p) { return std::string(p.kind == NormKind::l1 ? "l1-pull" : "linf-pull"); },
                 [](const NormScaledPull& p) {
                   return std::string(p.kind == NormKind::l1 ? "l1-scaled" : "linf-scaled");
                 },
                 [](const CoordinateStep& c) { return std::string(c.all_coordinates ? "coord-both" : "coord-largest"); },
                 [](const StatisticalCenter&) { return std::string("statistical-center"); }},
      H);
}

std::string RuleSet::describe() const { return rules_to_json(*this).dump(); }

RuleSet rules_from_json(const nlohmann::json& j) {
  config::check_keys(j, {"F", "H", "smoother"}, "rules");
  RuleSet rs;
  if (j.contains("F")) {
    const auto& f = j.at("F");
    const std::string v = f.at("variant").get<std::string>();
    if (v == "uniform") {
      config::check_keys(f, {"variant"}, "rules.F");
      rs.F = UniformHit{};
    } else if (v == "boundary-proportional") {
      config::check_keys(f, {"variant"}, "rules.F");
      rs.F = BoundaryProportionalHit{};
    } else if (v == "distance-power") {
      config::check_keys(f, {"variant", "beta", "phi_table"}, "rules.F");
      DistancePowerHit d;
      d.beta = f.value("beta", 0.0);
      if (f.contains("phi_table")) {
        const auto& t = f.at("phi_table");
        config::check_keys(t, {"t", "values"}, "rules.F.phi_table");
        d.table_t = t.at("t").get<std::vector<double>>();
        d.table_v = t.at("values").get<std::vector<double>>();
        if (d.table_t.size() < 2 || d.table_t.size() != d.table_v.size())
          throw ConfigError("rules.F.phi_table: need matching t/values arrays of length >= 2");
        for (std::size_t k = 0; k < d.table_t.size(); ++k) {
          if (!(d.table_v[k] > 0)) throw ConfigError("rules.F.phi_table: values must be positive");
          if (k > 0 && !(d.table_t[k] > d.table_t[k - 1]))
            throw ConfigError("rules.F.phi_table: t must be strictly increasing");
        }
      }
      rs.F = d;
    } else if (v == "harmonic-exact-ball") {
      config::check_keys(f, {"variant"}, "rules.F");
      rs.F = HarmonicBallHit{};
    } else if (v == "harmonic-mc") {
      config::check_keys(f, {"variant", "n_exits", "shell", "refresh_every"}, "rules.F");
      HarmonicMcHit h;
      h.n_exits = f.value("n_exits", h.n_exits);
      h.shell = f.value("shell", h.shell);
      h.refresh_every = f.value("refresh_every", h.refresh_every);
      if (h.n_exits == 0 || !(h.shell > 0) || h.refresh_every == 0)
        throw ConfigError("rules.F: harmonic-mc needs n_exits > 0, shell > 0, refresh_every > 0");
      rs.F = h;
    } else {
      throw ConfigError("rules.F: unknown variant '" + v + "'");
    }
  }
  if (j.contains("H")) {
    const auto& h = j.at("H");
    const std::string v = h.at("variant").get<std::string>();
    auto plain = [&](TransportRule rule) {
      config::check_keys(h, {"variant"}, "rules.H");
      rs.H = std::move(rule);
    };
    if (v == "origin") {
      plain(ToOrigin{});
    } else if (v == "gamma-linear") {
      config::check_keys(h, {"variant", "gamma"}, "rules.H");
      const double g = h.at("gamma").get<double>();
      if (!(g >= 0.0 && g < 1.0)) throw ConfigError("rules.H: gamma must lie in [0, 1)");
      rs.H = GammaLinear{g};
    } else if (v == "unit-pull") {
      plain(UnitPull{});
    } else if (v == "linf-pull") {
      plain(NormPull{NormKind::linf});
    } else if (v == "l1-pull") {
      plain(NormPull{NormKind::l1});
    } else if (v == "linf-scaled" || v == "l1-scaled") {
      config::check_keys(h, {"variant", "divisor"}, "rules.H");
      NormScaledPull p{v == "l1-scaled" ? NormKind::l1 : NormKind::linf, h.value("divisor", 10.0)};
      if (!(p.divisor > std::sqrt(2.0))) throw ConfigError("rules.H: divisor must exceed sqrt(2)");
      rs.H = p;
    } else if (v == "coord-largest") {
      plain(CoordinateStep{false});
    } else if (v == "coord-both") {
      plain(CoordinateStep{true});
    } else if (v == "statistical-center") {
      plain(StatisticalCenter{});
    } else {
      throw ConfigError("rules.H: unknown variant '" + v + "'");
    }
  }
  if (j.contains("smoother")) {
    const auto& s = j.at("smoother");
    config::check_keys(s, {"eta", "bypass"}, "rules.smoother");
    rs.smoother_eta = s.value("eta", rs.smoother_eta);
    rs.bypass_smoother = s.value("bypass", false);
    if (!(rs.smoother_eta > 0 && rs.smoother_eta <= 1)) throw ConfigError("rules.smoother: eta must lie in (0, 1]");
  }
  return rs;
}

nlohmann::ordered_json rules_to_json(const RuleSet& rules) {
  nlohmann::ordered_json f = {{"variant", hitting_name(rules.F)}};
  std::visit(overloaded{[&](const DistancePowerHit& d) {
                          f["beta"] = d.beta;
                          if (!d.is_power()) f["phi_table"] = {{"t", d.table_t}, {"values", d.table_v}};
                        },
                        [&](const HarmonicMcHit& h) {
                          f["n_exits"] = h.n_exits;
                          f["shell"] = h.shell;
                          f["refresh_every"] = h.refresh_every;
                        },
                        [](const auto&) {}},
             rules.F);
  nlohmann::ordered_json h = {{"variant", transport_name(rules.H)}};
  std::visit(overloaded{[&](const GammaLinear& g) { h["gamma"] = g.gamma; },
                        [&](const NormScaledPull& p) { h["divisor"] = p.divisor; }, [](const auto&) {}},
             rules.H);
  return {{"F", f}, {"H", h}, {"smoother", {{"eta", rules.smoother_eta}, {"bypass", rules.bypass_smoother}}}};
}

// ---------------------------------------------------------------------------
// Scalars

double bump_scale(double eps, double y, int n) {
  if (!(eps > 0) || !(y > 0)) throw InvalidArgument("bump_scale: eps and y must be positive");
  return std::pow(eps, 1.0 / n) * std::pow(y, -1.0 / (n - 1));
}

double min_resolved_eta(const SphereGrid& grid) { return 3.0 * grid.spacing(); }

BumpScale bump_scale(double eps, double y, const SphereGrid& grid, ResolutionPolicy policy) {
  BumpScale s;
  s.raw_eta = bump_scale(eps, y, grid.dim());
  s.eta = s.raw_eta;
  const double floor_eta = min_resolved_eta(grid);
  if (s.eta < floor_eta) {
    if (policy == ResolutionPolicy::strict) {
      const double needed = std::ceil(static_cast<double>(grid.size()) * floor_eta / s.eta);
      throw ResolutionError("bump scale eta = " + io::format_double(s.eta) + " is below the grid resolution (" +
                            io::format_double(floor_eta) + "); use M >= " + io::format_double(needed) +
                            " or a larger epsilon");
    }
    s.eta = floor_eta;
    s.floored = true;
  }
  if (s.eta > 1.0) throw DegenerateDomain("bump scale eta > 1: the domain is too small for this epsilon");
  return s;
}

double y_factor(const RadialField& r, const RadialField& density) {
  require_same_grid(r, density);
  const SphereGrid& g = r.grid();
  const int n = g.dim();
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double rn1 = n == 2 ? r[j] : r[j] * r[j];
    acc += rn1 * density[j] * g.weight(j);
  }
  const double y = g.area() * acc;
  if (!(y >= 1e-12)) throw DegenerateDomain("y_{r,x} below 1e-12: degenerate domain");
  return y;
}

RadialField drift_b(const RadialField& r, const RadialField& density) {
  const double y = y_factor(r, density);
  return density.scaled(r.grid().area() / y);
}

// ---------------------------------------------------------------------------
// RuleEngine

RuleEngine::RuleEngine(RuleSet rules, GridPtr grid)
    : rules_(std::move(rules)), grid_(grid), smoother_(make_bump_kernel(rules_.smoother_eta, grid)) {
  if (std::holds_alternative<HarmonicMcHit>(rules_.F) && grid_->dim() != 2)
    throw InvalidArgument("harmonic-mc is implemented for n = 2 only");
  if (std::holds_alternative<CoordinateStep>(rules_.H) && grid_->dim() != 2)
    throw InvalidArgument("coordinate-step transport is defined for n = 2 only");
}

RadialField RuleEngine::smooth(const RadialField& r) const {
  if (rules_.bypass_smoother) return r;
  return spherical_convolve(r, smoother_);
}

Domain RuleEngine::domain(RadialField r) const {
  if (!r.grid().same_as(*grid_)) throw GridMismatch("RuleEngine: field lives on another grid");
  if (!(r.min() > 0.0)) throw DegenerateDomain("boundary must be strictly positive");
  Domain d{r, smooth(r), nullptr};
  if (std::holds_alternative<HarmonicMcHit>(rules_.F)) d.polygon = std::make_shared<const Polygon>(d.smooth);
  return d;
}

void RuleEngine::check_interior(const Domain& d, const Vec& x) const {
  const double len = norm(x);
  const double margin = kInteriorMargin * d.smooth.max();
  if (len == 0.0) return;
  const double limit = d.smooth.at(scaled(x, 1.0 / len)) - margin;
  if (!(len <= limit)) {
    throw DomainViolation("particle at radius " + io::format_double(len) +
                          " is outside the smoothed domain (limit " + io::format_double(limit) + ")");
  }
}

Density RuleEngine::eval_density(const Domain& d, const Vec& x, Stream* rng) const {
  const SphereGrid& g = *grid_;
  const std::size_t M = g.size();
  const int n = g.dim();
  const double omega = g.area();
  std::vector<double> f(M);
  Density out;

  auto distances2 = [&](const RadialField& rho, std::vector<double>& d2) {
    d2.resize(M);
    if (n == 2) {
      kernels::polar_distance2(rho.values(), g.xs(), g.ys(), x[0], x[1], d2);
    } else {
      for (std::size_t j = 0; j < M; ++j) {
        double s = 0;
        for (int c = 0; c < 3; ++c) {
          const double e = rho[j] * g.node(j)[c] - x[c];
          s += e * e;
        }
        d2[j] = s;
      }
    }
  };

  std::visit(
      overloaded{
          [&](const UniformHit&) { std::fill(f.begin(), f.end(), 1.0 / omega); },
          [&](const BoundaryProportionalHit&) {
            for (std::size_t j = 0; j < M; ++j) f[j] = d.r[j];
          },
          [&](const DistancePowerHit& dp) {
            check_interior(d, x);
            std::vector<double> d2;
            distances2(d.smooth, d2);
            if (dp.is_power()) {
              kernels::pow_half(d2, 0.5 * dp.beta, f);
            } else {
              for (std::size_t j = 0; j < M; ++j) f[j] = dp.phi(std::sqrt(d2[j]));
            }
          },
          [&](const HarmonicBallHit&) {
            const double top = d.smooth.max();
            if (oscillation(d.smooth) > 1e-8 * top)
              throw InvalidArgument("harmonic-exact-ball: smoothed domain is not a centred ball");
            check_interior(d, x);
            const double R = integrate(d.smooth) / omega;
            const double x2 = dot(x, x);
            std::vector<double> d2;
            distances2(RadialField(grid_, R), d2);
            std::vector<double> p(M);
            kernels::pow_half(d2, -0.5 * n, p);
            const double scale = std::pow(R, n - 2) * (R * R - x2) / omega;
            for (std::size_t j = 0; j < M; ++j) f[j] = scale * p[j];
          },
          [&](const HarmonicMcHit& h) {
            if (!rng) throw InvalidArgument("harmonic-mc density needs a random stream");
            check_interior(d, x);
            const double shell = h.shell * d.smooth.max();
            std::vector<double> counts(M, 0.0);
            for (std::size_t k = 0; k < h.n_exits; ++k) {
              const WosExit e = walk_on_spheres(*d.polygon, x, shell, *rng);
              counts[g.nearest_node(e.direction)] += 1.0;
            }
            for (std::size_t j = 0; j < M; ++j)
              counts[j] /= static_cast<double>(h.n_exits) * g.weight(j);
            const RadialField smoothed = spherical_convolve(RadialField(grid_, std::move(counts)), smoother_);
            f.assign(smoothed.values().begin(), smoothed.values().end());
            out.exits = h.n_exits;
            out.under_sampled = h.n_exits < 1000;
          }},
      rules_.F);

  for (double v : f) {
    if (!std::isfinite(v) || v < 0.0) throw DomainViolation("hitting density is not finite and nonnegative");
  }
  normalize_density(f, g);
  out.values = RadialField(grid_, std::move(f));
  return out;
}

Vec RuleEngine::sample_from_density(const RadialField& density, double u) const {
  const SphereGrid& g = *grid_;
  const std::size_t M = g.size();
  thread_local std::vector<double> cdf;
  cdf.resize(M);
  double acc = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    acc += density[j] * g.weight(j);
    cdf[j] = acc;
  }
  const double target = u * acc;
  std::size_t j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
  j = std::min(j, M - 1);
  const double lo = j == 0 ? 0.0 : cdf[j - 1];
  const double mass = cdf[j] - lo;
  const double frac = mass > 0 ? std::clamp((target - lo) / mass, 0.0, 1.0) : 0.5;
  if (g.dim() != 2) return g.node(j);
  const double a = g.angle(j) + (frac - 0.5) * g.spacing();
  return {std::cos(a), std::sin(a), 0.0};
}

Vec RuleEngine::sample_angle(const Domain& d, const Vec& x, Stream& rng) const {
  if (const auto* h = std::get_if<HarmonicMcHit>(&rules_.F)) {
    check_interior(d, x);
    return walk_on_spheres(*d.polygon, x, h->shell * d.smooth.max(), rng).direction;
  }
  const Density dens = eval_density(d, x);
  return sample_from_density(dens.values, rng.uniform());
}

double RuleEngine::y_monte_carlo(const Domain& d, const Vec& x, std::size_t n, Stream& rng) const {
  const auto* h = std::get_if<HarmonicMcHit>(&rules_.F);
  if (!h) throw InvalidArgument("y_monte_carlo: rule is not harmonic-mc");
  if (n == 0) throw InvalidArgument("y_monte_carlo: need at least one exit");
  check_interior(d, x);
  const double shell = h->shell * d.smooth.max();
  const int dim = grid_->dim();
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec xi = walk_on_spheres(*d.polygon, x, shell, rng).direction;
    acc += std::pow(d.r.at(xi), dim - 1);
  }
  return grid_->area() * acc / static_cast<double>(n);
}

TransportResult RuleEngine::transport(const Domain& d, const Vec& xi) const {
  TransportResult res;
  const double rt = d.smooth.at(xi);
  const auto radial = [&](double len) { return scaled(xi, len); };
  bool check_only = false;
  res.x = std::visit(
      overloaded{[&](const ToOrigin&) { return Vec{0, 0, 0}; },
                 [&](const GammaLinear& gl) { return radial(gl.gamma * rt); },
                 [&](const RadialPull& p) { return radial(p.alpha(rt, xi)); },
                 [&](const UnitPull&) { return radial(std::max(rt - 1.0, 0.0)); },
                 [&](const NormPull& p) { return radial(std::max(rt - norm_ratio(xi, p.kind), 0.0)); },
                 [&](const NormScaledPull& p) { return radial((1.0 - norm_ratio(xi, p.kind) / p.divisor) * rt); },
                 [&](const CoordinateStep& c) {
                   Vec p = radial(rt);
                   auto pull = [](double v) { return v > 0 ? std::max(v - 1.0, 0.0) : std::min(v + 1.0, 0.0); };
                   if (c.all_coordinates) {
                     p[0] = pull(p[0]);
                     p[1] = pull(p[1]);
                   } else if (std::abs(p[0]) >= std::abs(p[1])) {
                     p[0] = pull(p[0]);
                   } else {
                     p[1] = pull(p[1]);
                   }
                   return p;
                 },
                 [&](const StatisticalCenter&) {
                   check_only = true;
                   const SphereGrid& g = *grid_;
                   Vec c{0, 0, 0};
                   for (std::size_t j = 0; j < g.size(); ++j) {
                     const double w = d.smooth[j] * g.weight(j);
                     for (int k = 0; k < 3; ++k) c[k] += w * g.node(j)[k];
                   }
                   return c;
                 }},
      rules_.H);

  const double len = norm(res.x);
  if (len == 0.0) return res;
  const Vec dir = scaled(res.x, 1.0 / len);
  const double boundary = d.smooth.at(dir);
  if (check_only) {
    res.outside = len >= boundary;
    return res;
  }
  // keep the particle admissible for the next density evaluation
  const double limit = std::min(boundary * (1.0 - 1e-9), boundary - 2.0 * kInteriorMargin * d.smooth.max());
  if (len > limit) {
    res.x = scaled(dir, std::max(limit, 0.0));
    res.clamped = true;
  }
  return res;
}

ScaleProbeReport probe_scale_invariance(const RuleEngine& engine, const RadialField& r, const Vec& x,
                                        std::size_t probes, Stream& rng) {
  ScaleProbeReport rep;
  const Domain base = engine.domain(r);
  const bool exact = engine.rules().exact_density();
  const RadialField f0 = exact ? engine.eval_density(base, x).values : RadialField();
  const int n = r.grid().dim();
  for (std::size_t k = 0; k < probes; ++k) {
    const double c = std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));
    const Domain sc = engine.domain(r.scaled(c));
    if (exact) {
      const RadialField f1 = engine.eval_density(sc, scaled(x, c)).values;
      for (std::size_t j = 0; j < r.size(); ++j)
        rep.density_dev = std::max(rep.density_dev, std::abs(f1[j] - f0[j]));
    }
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    Vec xi{std::cos(a), std::sin(a), 0.0};
    if (n == 3) {
      const double z = 2.0 * rng.uniform() - 1.0;
      const double s = std::sqrt(1 - z * z);
      xi = {s * std::cos(a), s * std::sin(a), z};
    }
    const Vec h0 = engine.transport(base, xi).x;
    const Vec h1 = engine.transport(sc, xi).x;
    double dev = 0;
    for (int i = 0; i < 3; ++i) dev = std::max(dev, std::abs(h1[i] - c * h0[i]) / c);
    rep.transport_dev = std::max(rep.transport_dev, dev);
    ++rep.probes;
  }
  return rep;
}

}  // namespace growth
