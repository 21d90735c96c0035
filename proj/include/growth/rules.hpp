#pragma once
// Hitting rules F(r, x, .), transport rules H(r, xi), the smoothing r -> r~ = r * g,
// and the derived scalars y_{r,x}, b(r, x) and the bump scale eta.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "growth/harmonic.hpp"
#include "growth/rng.hpp"
#include "growth/sphere.hpp"
#include "json.hpp"

namespace growth {

// ---------------------------------------------------------------------------
// Hitting rules

struct UniformHit {};

// F = r / int r, independent of the particle.
struct BoundaryProportionalHit {};

// F proportional to phi(|r~(theta) theta - x|). phi(t) = t^beta unless a table is given.
struct DistancePowerHit {
  double beta = 0.0;
  // optional tabulated phi: piecewise linear through (t_k, v_k), constant beyond the ends
  std::vector<double> table_t, table_v;
  bool is_power() const { return table_t.empty(); }
  double phi(double t) const;
};

// Exact Poisson kernel of a centred ball; only defined when r~ is a ball.
struct HarmonicBallHit {};

// Harmonic measure of r~ sampled by walk-on-spheres.
struct HarmonicMcHit {
  std::size_t n_exits = 1000;
  double shell = 1e-6;            // absorption shell relative to max r~
  std::size_t refresh_every = 1;  // jumps between y re-estimates (1 = every jump)
};

using HittingRule =
    std::variant<UniformHit, BoundaryProportionalHit, DistancePowerHit, HarmonicBallHit, HarmonicMcHit>;

// ---------------------------------------------------------------------------
// Transport rules. All radial variants are evaluated on the smoothed domain r~.

struct ToOrigin {};
struct GammaLinear {
  double gamma = 0.5;  // alpha(l, z) = gamma * l
};
// alpha(l, z) supplied by the caller; set linear_in_length when alpha(c l, z) = c alpha(l, z).
struct RadialPull {
  std::string name;
  std::function<double(double, const Vec&)> alpha;
  bool linear_in_length = false;
};
// (r~(xi) - 1)_+ xi
struct UnitPull {};
enum class NormKind { l1, linf };
// (r~(xi) - |xi|_k / |xi|_2)_+ xi
struct NormPull {
  NormKind kind = NormKind::linf;
};
// (1 - |xi|_k / (divisor |xi|_2)) r~(xi) xi
struct NormScaledPull {
  NormKind kind = NormKind::linf;
  double divisor = 10.0;
};
// From r~(xi) xi, one unit towards the origin in the largest coordinate (ties go to x)
// or in every coordinate. A coordinate smaller than one unit is moved to zero.
struct CoordinateStep {
  bool all_coordinates = false;
};
// int r~(z) z dsigma(z); not clamped, only checked.
struct StatisticalCenter {};

using TransportRule = std::variant<ToOrigin, GammaLinear, RadialPull, UnitPull, NormPull, NormScaledPull,
                                   CoordinateStep, StatisticalCenter>;

struct RuleSet {
  HittingRule F = UniformHit{};
  TransportRule H = ToOrigin{};
  double smoother_eta = 0.1;
  bool bypass_smoother = false;  // force r~ = r

  // Assumption (I): F(cr, cx) = F(r, x) and H(cr, .) = c H(r, .).
  bool scale_invariant() const;
  bool exact_density() const { return !std::holds_alternative<HarmonicMcHit>(F); }
  std::string describe() const;
};

std::string hitting_name(const HittingRule& F);
std::string transport_name(const TransportRule& H);

// Strict JSON schema: {"F": {...}, "H": {...}, "smoother": {...}}; unknown keys throw ConfigError.
RuleSet rules_from_json(const nlohmann::json& j);
nlohmann::ordered_json rules_to_json(const RuleSet& rules);

// ---------------------------------------------------------------------------
// Evaluation

// A boundary r together with its smoothed version and, for walk-on-spheres,
// the polygon of r~.
struct Domain {
  RadialField r;
  RadialField smooth;
  std::shared_ptr<const Polygon> polygon;
};

struct Density {
  RadialField values;
  bool under_sampled = false;
  std::size_t exits = 0;
};

struct TransportResult {
  Vec x{};
  bool clamped = false;
  bool outside = false;  // statistical centre outside r~
};

enum class ResolutionPolicy {
  strict,  // eta below the grid resolution is an error
  floor,   // eta is raised to the smallest resolvable value
};

struct BumpScale {
  double eta = 0.0;
  double raw_eta = 0.0;
  bool floored = false;
};

// eps^{1/n} y^{-1/(n-1)}
double bump_scale(double eps, double y, int n);
// As above, with the guard grid spacing <= eta / 3 applied per policy.
BumpScale bump_scale(double eps, double y, const SphereGrid& grid, ResolutionPolicy policy);
double min_resolved_eta(const SphereGrid& grid);

// y = omega_n sum_j r_j^{n-1} density_j w_j
double y_factor(const RadialField& r, const RadialField& density);
// b = omega_n density / y
RadialField drift_b(const RadialField& r, const RadialField& density);

// Binds a rule set to a grid (and its smoothing kernel).
class RuleEngine {
 public:
  RuleEngine(RuleSet rules, GridPtr grid);

  const RuleSet& rules() const { return rules_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const BumpKernel& smoother() const { return smoother_; }

  RadialField smooth(const RadialField& r) const;
  Domain domain(RadialField r) const;

  // Throws DomainViolation when x is not inside r~ with margin 1e-6 max r~
  // (rules that look at the particle only).
  void check_interior(const Domain& d, const Vec& x) const;

  Density eval_density(const Domain& d, const Vec& x, Stream* rng = nullptr) const;

  // Inverse CDF over the node cells with the cell mass spread uniformly in angle.
  Vec sample_from_density(const RadialField& density, double u) const;
  Vec sample_angle(const Domain& d, const Vec& x, Stream& rng) const;

  TransportResult transport(const Domain& d, const Vec& xi) const;

  // omega_n * mean r(xi_k)^{n-1} over n exits from x (harmonic-mc only).
  double y_monte_carlo(const Domain& d, const Vec& x, std::size_t n, Stream& rng) const;

 private:
  RuleSet rules_;
  GridPtr grid_;
  BumpKernel smoother_;
};

// Largest node-wise deviation |F(cr,cx) - F(r,x)| and |H(cr,xi) - c H(r,xi)| / c over
// random probes; exact-density rules only.
struct ScaleProbeReport {
  double density_dev = 0.0;
  double transport_dev = 0.0;
  std::size_t probes = 0;
};
ScaleProbeReport probe_scale_invariance(const RuleEngine& engine, const RadialField& r, const Vec& x,
                                        std::size_t probes, Stream& rng);

}  // namespace growth
