// Command-line front end: simulate, ode, invariant-check, sweep, shape-rescale,
// lattice, validate-kernels and figure3.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include "CLI11.hpp"
#include "growth/averaged_ode.hpp"
#include "growth/config.hpp"
#include "growth/errors.hpp"
#include "growth/experiments.hpp"
#include "growth/io.hpp"
#include "growth/jump_process.hpp"
#include "growth/kernels.hpp"
#include "growth/lattice.hpp"
#include "growth/shapes.hpp"
#include "growth/stats.hpp"

#ifndef GROWTH_VERSION
#define GROWTH_VERSION "dev"
#endif

namespace {

using namespace growth;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kExpectFailed = 2;

std::string build_id() { return std::string("growthsim ") + GROWTH_VERSION; }

// Reads a config file; a previous run's meta.json works as well.
json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(io::read_file(path));
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  j.erase("version");
  j.erase("isa");
  return j;
}

ordered_json with_version(ordered_json meta) {
  meta["version"] = build_id();
  meta["isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  return meta;
}

void write_json(const std::filesystem::path& p, const ordered_json& j) { io::write_atomic(p.string(), j.dump(2) + "\n"); }

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
  sub->add_option("--config", c.config, "JSON config (or a previous meta.json)");
  sub->add_option("--out", c.out, "output directory");
  if (with_seed) sub->add_option("--seed", c.seed, "root seed");
  sub->add_flag("--strict", c.strict, "treat monitor triggers as failures");
}

std::string out_dir(const Common& c, const json& cfg, const std::string& fallback) {
  if (!c.out.empty()) return c.out;
  if (cfg.contains("out")) return cfg.at("out").get<std::string>();
  return fallback;
}

// ---------------------------------------------------------------------------
// simulate

struct SimOverrides {
  std::optional<double> eps, T;
  std::optional<std::size_t> M;
};

int run_simulate(const Common& c, const SimOverrides& o) {
  json cfg = load_config(c.config);
  config::check_keys(cfg, {"command", "out", "rules", "n", "M", "shape", "x0", "eps", "T", "seed", "policy", "clock",
                           "snapshots", "monitors", "strict"},
                     "simulate");
  if (c.seed) cfg["seed"] = *c.seed;
  if (o.eps) cfg["eps"] = *o.eps;
  if (o.T) cfg["T"] = *o.T;
  if (o.M) cfg["M"] = *o.M;
  if (c.strict) cfg["strict"] = true;
  const std::string dir = out_dir(c, cfg, "run_simulate");
  cfg["out"] = dir;

  const int n = config::get_or(cfg, "n", 2, "simulate");
  const std::size_t M = config::get_or(cfg, "M", std::size_t{1024}, "simulate");
  const GridPtr grid = make_grid(n, M);
  const RuleSet rules = rules_from_json(cfg.value("rules", json::object()));
  const RadialField r0 = shape_from_json(cfg.value("shape", json("ball")), grid);
  const Vec x0 = cfg.contains("x0") ? config::point_from_json(cfg.at("x0")) : Vec{0, 0, 0};
  ProcessOptions po;
  po.eps = config::get_or(cfg, "eps", 1e-3, "simulate");
  po.policy = policy_from_name(config::get_or(cfg, "policy", std::string("strict"), "simulate"));
  const std::string clock = config::get_or(cfg, "clock", std::string("exponential"), "simulate");
  if (clock != "exponential" && clock != "fixed") throw ConfigError("simulate.clock: exponential or fixed");
  po.clock = clock == "fixed" ? ClockMode::fixed : ClockMode::exponential;
  SimulateOptions so;
  so.T = config::get_or(cfg, "T", 1.0, "simulate");
  so.strict = config::get_or(cfg, "strict", false, "simulate");
  if (cfg.contains("snapshots")) {
    const json& s = cfg.at("snapshots");
    config::check_keys(s, {"spacing", "count", "first_fraction"}, "simulate.snapshots");
    const std::string sp = config::get_or(s, "spacing", std::string("geometric"), "simulate.snapshots");
    if (sp != "geometric" && sp != "uniform") throw ConfigError("simulate.snapshots.spacing: geometric or uniform");
    so.plan.spacing = sp == "uniform" ? SnapshotSpacing::uniform : SnapshotSpacing::geometric;
    so.plan.count = config::get_or(s, "count", so.plan.count, "simulate.snapshots");
    so.plan.first_fraction = config::get_or(s, "first_fraction", so.plan.first_fraction, "simulate.snapshots");
  }
  if (cfg.contains("monitors")) {
    const json& m = cfg.at("monitors");
    config::check_keys(m, {"delta_density", "delta_radius"}, "simulate.monitors");
    so.monitors.delta_density = config::get_or(m, "delta_density", 0.0, "simulate.monitors");
    so.monitors.delta_radius = config::get_or(m, "delta_radius", 0.0, "simulate.monitors");
  }
  const std::uint64_t seed = config::get_or(cfg, "seed", std::uint64_t{1}, "simulate");
  if (!(po.eps > 0) || !(so.T > 0)) throw ConfigError("simulate: eps and T must be positive");

  const RuleEngine engine(rules, grid);
  JumpProcess proc(engine, po);
  Stream rng(seed, "simulate");
  const Trajectory tr = simulate(proc, r0, x0, so, rng);
  cfg["command"] = "simulate";
  write_trajectory(dir, tr, with_version(ordered_json(cfg)));
  std::cout << "simulate: " << tr.final_state.jumps << " jumps, Leb " << io::format_double(tr.leb0) << " -> "
            << io::format_double(leb_volume(tr.final_state.r)) << ", clamps " << tr.final_state.clamps << ", eta floored "
            << tr.final_state.floored << ", output " << dir << "\n";
  if (tr.monitors.any()) std::cout << "simulate: monitor triggered (see monitors.json)\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// ode

EstimatorConfig estimator_from(const json& cfg, const std::string& where, EstimatorKind fallback) {
  EstimatorConfig e;
  e.kind = fallback;
  if (!cfg.contains("estimator")) return e;
  const json& j = cfg.at("estimator");
  config::check_keys(j, {"kind", "burn", "len", "batches", "starts"}, where + ".estimator");
  if (j.contains("kind")) e.kind = estimator_from_name(j.at("kind").get<std::string>());
  e.burn = config::get_or(j, "burn", e.burn, where);
  e.len = config::get_or(j, "len", e.len, where);
  e.batches = config::get_or(j, "batches", e.batches, where);
  e.starts = config::get_or(j, "starts", e.starts, where);
  return e;
}

int run_ode(const Common& c) {
  json cfg = load_config(c.config);
  config::check_keys(cfg, {"command", "out", "rules", "n", "M", "shape", "T", "dt", "estimator", "integrator", "seed",
                           "record_every"},
                     "ode");
  if (c.seed) cfg["seed"] = *c.seed;
  const std::string dir = out_dir(c, cfg, "run_ode");
  cfg["out"] = dir;
  const GridPtr grid = make_grid(config::get_or(cfg, "n", 2, "ode"), config::get_or(cfg, "M", std::size_t{1024}, "ode"));
  const RuleSet rules = rules_from_json(cfg.value("rules", json::object()));
  const RadialField r0 = shape_from_json(cfg.value("shape", json("ball")), grid);
  OdeOptions oo;
  oo.T = config::get_or(cfg, "T", 1.0, "ode");
  oo.dt = config::get_or(cfg, "dt", 0.0, "ode");
  oo.record_every = config::get_or(cfg, "record_every", std::size_t{1}, "ode");
  if (cfg.contains("integrator")) {
    const std::string name = cfg.at("integrator").get<std::string>();
    if (name != "euler" && name != "rk4") throw ConfigError("ode.integrator: euler or rk4");
    oo.integrator = name == "rk4" ? Integrator::rk4 : Integrator::euler;
  }
  const EstimatorConfig est = estimator_from(cfg, "ode", has_closed_form(rules) ? EstimatorKind::closed_form : EstimatorKind::chain);
  const RuleEngine engine(rules, grid);
  Stream rng(config::get_or(cfg, "seed", std::uint64_t{1}, "ode"), "ode");
  const OdeTrajectory ode = integrate_ode(engine, r0, oo, est, rng);
  write_ode(dir, ode);
  const double leb0 = leb_volume(r0);
  double vol_dev = 0.0;
  ordered_json series = ordered_json::array();
  for (std::size_t k = 0; k < ode.times.size(); ++k) {
    const double t = ode.times[k];
    const double dev = std::abs(leb_volume(ode.states[k]) - leb0 - t) / (1 + t);
    vol_dev = std::max(vol_dev, dev);
    series.push_back({{"t", t},
                      {"leb", leb_volume(ode.states[k])},
                      {"osc_normalized", oscillation(normalized_profile(ode.states[k], t, leb0))}});
  }
  cfg["command"] = "ode";
  write_json(std::filesystem::path(dir) / "meta.json", with_version(ordered_json(cfg)));
  write_json(std::filesystem::path(dir) / "ode_summary.json",
             {{"estimator", estimator_name(est.kind)},
              {"integrator", ode.integrator == Integrator::rk4 ? "rk4" : "euler"},
              {"dt", ode.dt},
              {"max_relative_volume_deviation", vol_dev},
              {"series", series}});
  std::cout << "ode: " << ode.times.size() << " states, dt " << io::format_double(ode.dt)
            << ", max |Leb(r_t) - Leb(r_0) - t| / (1 + t) = " << io::format_double(vol_dev) << ", output " << dir << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// invariant-check

struct InvariantArgs {
  std::string rules, shape = "ball", estimator;
  std::size_t M = 1024;
  std::size_t len = 100000;
  std::optional<double> tol;
};

int run_invariant(const Common& c, const InvariantArgs& a) {
  json rules_json = a.rules.empty() ? json::object() : json::parse(io::read_file(a.rules));
  if (rules_json.contains("rules")) rules_json = rules_json.at("rules");
  const RuleSet rules = rules_from_json(rules_json);
  const GridPtr grid = make_grid(2, a.M);
  json shape_spec = a.shape;
  if (!a.shape.empty() && a.shape.front() == '{') shape_spec = json::parse(a.shape);
  const RadialField psi = shape_from_json(shape_spec, grid);
  EstimatorConfig est;
  est.kind = a.estimator.empty() ? (has_closed_form(rules) ? EstimatorKind::closed_form : EstimatorKind::chain)
                                 : estimator_from_name(a.estimator);
  est.len = a.len;
  const RuleEngine engine(rules, grid);
  Stream rng(c.seed.value_or(1), "invariant-check");
  const Residual res = invariant_residual(engine, psi, est, rng);
  double tol = 0.0;
  std::string basis;
  if (a.tol) {
    tol = *a.tol;
    basis = "given";
  } else if (res.stderr_value) {
    tol = 3.0 * *res.stderr_value;
    basis = "3 stderr";
  } else {
    tol = 1e-10;
    basis = "deterministic";
  }
  const bool pass = res.value <= tol;
  ordered_json out = {{"rules", rules_to_json(rules)},
                      {"shape", shape_spec},
                      {"M", a.M},
                      {"estimator", estimator_name(est.kind)},
                      {"residual", res.value},
                      {"stderr", res.stderr_value ? ordered_json(*res.stderr_value) : ordered_json(nullptr)},
                      {"tolerance", tol},
                      {"tolerance_basis", basis},
                      {"pass", pass}};
  if (!c.out.empty()) {
    io::ensure_directory(c.out);
    write_json(std::filesystem::path(c.out) / "residuals.json", with_version(out));
  }
  std::cout << "invariant-check: residual " << io::format_double(res.value);
  if (res.stderr_value) std::cout << " (stderr " << io::format_double(*res.stderr_value) << ")";
  std::cout << ", tolerance " << io::format_double(tol) << " [" << basis << "] -> " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kOk : kExpectFailed;
}

// ---------------------------------------------------------------------------
// sweep / shape-rescale / figure3

int run_sweep(const Common& c) {
  json cfg = load_config(c.config);
  const std::string dir = out_dir(c, cfg, "run_sweep");
  cfg.erase("out");
  if (c.seed) throw ConfigError("sweep: set the seed list in the config");
  const SweepConfig sc = sweep_config_from_json(cfg);
  const SweepResult res = averaging_sweep(sc);
  write_sweep(dir, sc, res);
  ordered_json meta = sweep_config_to_json(sc);
  meta["out"] = dir;
  write_json(std::filesystem::path(dir) / "meta.json", with_version(meta));
  for (const SweepLevel& l : res.levels)
    std::cout << "sweep: eps " << io::format_double(l.eps) << " median sup L2 " << io::format_double(l.median) << " IQR "
              << io::format_double(l.iqr) << " sign p " << io::format_double(l.sign_p) << "\n";
  bool triggered = false;
  for (const SweepRow& r : res.rows) triggered = triggered || r.radius_triggered || r.density_triggered;
  for (const auto& f : res.failures) std::cout << "sweep: " << f << "\n";
  if (c.strict && triggered) {
    std::cout << "sweep: monitor triggered under --strict\n";
    return kExpectFailed;
  }
  return res.expectations_met ? kOk : kExpectFailed;
}

int run_shape_rescale(const Common& c) {
  json cfg = load_config(c.config);
  const std::string dir = out_dir(c, cfg, "run_shape_rescale");
  cfg.erase("out");
  json expect = cfg.value("expect", json::object());
  cfg.erase("expect");
  config::check_keys(expect, {"decreasing", "coupling_tol"}, "shape-rescale.expect");
  const ShapeRescaleConfig sc = shape_rescale_config_from_json(cfg);
  const ShapeRescaleResult res = shape_rescale_experiment(sc);
  write_shape_rescale(dir, sc, res);
  ordered_json meta = shape_rescale_config_to_json(sc);
  meta["out"] = dir;
  meta["expect"] = expect;
  write_json(std::filesystem::path(dir) / "meta.json", with_version(meta));
  bool ok = true;
  const double tol = expect.value("coupling_tol", 1e-10);
  for (const auto& lv : res.levels) {
    std::cout << "shape-rescale: N " << io::format_double(lv.N) << " median metric " << io::format_double(lv.median)
              << " coupling gap " << io::format_double(lv.coupling_gap) << "\n";
    if (sc.check_coupling && lv.coupling_gap > tol) ok = false;
  }
  if (expect.value("decreasing", false) && !res.decreasing) ok = false;
  return ok ? kOk : kExpectFailed;
}

int run_figure3(const Common& c) {
  json cfg = load_config(c.config);
  const std::string dir = out_dir(c, cfg, "run_figure3");
  cfg.erase("out");
  if (c.seed) cfg["seed"] = *c.seed;
  const Figure3Config fc = figure3_config_from_json(cfg);
  const Figure3Result res = figure3_run(fc);
  write_figure3(dir, fc, res);
  ordered_json meta = figure3_config_to_json(fc);
  meta["out"] = dir;
  write_json(std::filesystem::path(dir) / "meta.json", with_version(meta));
  std::cout << "figure3: " << res.trajectory.final_state.jumps << " jumps, final diameter "
            << io::format_double(res.diameter.back()) << ", sqrt growth " << (res.sqrt_growth_ok ? "ok" : "off")
            << " (qualitative), output " << dir << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// lattice

struct LatticeArgs {
  std::optional<std::string> walk, rule;
  std::optional<double> a;
  std::optional<std::uint64_t> steps;
  std::optional<std::int64_t> L;
};

int run_lattice_cmd(const Common& c, const LatticeArgs& a) {
  json cfg = load_config(c.config);
  const std::string dir = out_dir(c, cfg, "run_lattice");
  cfg.erase("out");
  if (a.walk) cfg["walk"] = *a.walk;
  if (a.rule) cfg["rule"] = *a.rule;
  if (a.a) cfg["a"] = *a.a;
  if (a.steps) cfg["steps"] = *a.steps;
  if (a.L) cfg["L"] = *a.L;
  if (c.seed) cfg["seed"] = *c.seed;
  const lattice::LatticeConfig lc = lattice::lattice_config_from_json(cfg);
  const lattice::LatticeRun run = lattice::run_lattice(lc);
  lattice::write_lattice(dir, lc, run, with_version({}));
  ordered_json meta = lattice::lattice_config_to_json(lc);
  meta["out"] = dir;
  write_json(std::filesystem::path(dir) / "meta.json", with_version(meta));
  std::cout << "lattice: " << run.state.steps << " steps, range " << run.state.order.size() << ", aspect "
            << io::format_double(lattice::range_span(run.state).aspect()) << (run.state.halted ? ", left the box" : "")
            << (run.connected ? "" : ", RANGE DISCONNECTED") << "\n";
  return run.connected ? kOk : kExpectFailed;
}

// ---------------------------------------------------------------------------
// validate-kernels

struct ValidateArgs {
  std::size_t exits = 100000;
  std::size_t M = 4096;
};

int run_validate(const Common& c, const ValidateArgs& a) {
  using std::numbers::pi;
  bool ok = true;
  ordered_json report;
  report["isa"] = std::string(kernels::isa_name(kernels::active_isa()));

  const GridPtr grid = make_grid(2, a.M);
  ordered_json norms = ordered_json::array();
  for (double eta : {0.02, 0.05, 0.1, 0.2}) {
    const BumpKernel k = make_bump_kernel(eta, grid);
    const RadialField one = spherical_convolve(RadialField(grid, 1.0), k);
    double dev = 0;
    for (std::size_t j = 0; j < grid->size(); ++j) dev = std::max(dev, std::abs(one[j] - 1.0));
    const double cont = continuum_c_eta(eta, 2, cosine_profile());
    const bool pass = dev <= 1e-12;
    ok = ok && pass;
    norms.push_back({{"eta", eta}, {"max_deviation", dev}, {"c_eta_grid", k.c_eta()}, {"c_eta_continuum", cont}, {"pass", pass}});
    std::cout << "validate-kernels: eta " << eta << " max |1*g - 1| = " << io::format_double(dev) << " c_eta grid/continuum "
              << io::format_double(k.c_eta() / cont) << (pass ? " PASS" : " FAIL") << "\n";
  }
  report["normalization"] = norms;

  // walk-on-spheres exits from (0.5, 0) in the unit disk against the exact Poisson kernel
  const Polygon poly(RadialField(grid, 1.0));
  Stream rng(c.seed.value_or(1), "validate-kernels");
  std::vector<double> angles;
  angles.reserve(a.exits);
  for (std::size_t i = 0; i < a.exits; ++i) {
    const WosExit e = walk_on_spheres(poly, Vec{0.5, 0, 0}, 1e-6, rng);
    angles.push_back(std::atan2(e.direction[1], e.direction[0]));
  }
  const double ks = stats::ks_statistic(angles, [](double t) { return std::atan(3.0 * std::tan(t / 2)) / pi + 0.5; });
  const bool ks_pass = ks < 0.006;
  ok = ok && ks_pass;
  report["harmonic_ks"] = {{"exits", a.exits}, {"ks", ks}, {"threshold", 0.006}, {"pass", ks_pass}};
  std::cout << "validate-kernels: walk-on-spheres KS = " << io::format_double(ks) << " over " << a.exits << " exits"
            << (ks_pass ? " PASS" : " FAIL") << "\n";

  if (!c.out.empty()) {
    io::ensure_directory(c.out);
    write_json(std::filesystem::path(c.out) / "kernel_validation.json", with_version(report));
  }
  return ok ? kOk : kExpectFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random growth of star-shaped domains"};
  app.set_version_flag("--version", build_id());
  app.require_subcommand(1);

  Common sim_c, ode_c, inv_c, sweep_c, shape_c, lat_c, val_c, fig_c;
  SimOverrides sim_o;
  auto* sim = app.add_subcommand("simulate", "run the jump process and write a trajectory directory");
  add_common(sim, sim_c);
  sim->add_option("--eps", sim_o.eps, "epsilon");
  sim->add_option("--T", sim_o.T, "horizon");
  sim->add_option("--M", sim_o.M, "grid size");

  auto* ode = app.add_subcommand("ode", "integrate the averaged ODE");
  add_common(ode, ode_c);

  InvariantArgs inv_a;
  auto* inv = app.add_subcommand("invariant-check", "residual of the invariant-shape equation");
  add_common(inv, inv_c);
  inv->add_option("--rules", inv_a.rules, "rules JSON");
  inv->add_option("--shape", inv_a.shape, "shape name or JSON");
  inv->add_option("--M", inv_a.M, "grid size");
  inv->add_option("--estimator", inv_a.estimator, "closed-form | chain | transfer-matrix");
  inv->add_option("--len", inv_a.len, "chain length");
  inv->add_option("--tol", inv_a.tol, "residual tolerance");

  auto* sweep = app.add_subcommand("sweep", "averaging-principle sweep over epsilon");
  add_common(sweep, sweep_c);
  auto* shape = app.add_subcommand("shape-rescale", "rescaled scale-1 runs against an invariant shape");
  add_common(shape, shape_c, false);

  LatticeArgs lat_a;
  auto* lat = app.add_subcommand("lattice", "ORRW / OERW reference walks");
  add_common(lat, lat_c);
  lat->add_option("--walk", lat_a.walk, "orrw | oerw");
  lat->add_option("--rule", lat_a.rule, "proportional | largest | both");
  lat->add_option("--a", lat_a.a, "reinforcement strength");
  lat->add_option("--steps", lat_a.steps, "number of steps");
  lat->add_option("--L", lat_a.L, "box half-width");

  ValidateArgs val_a;
  auto* val = app.add_subcommand("validate-kernels", "kernel normalisation and harmonic sampler checks");
  add_common(val, val_c);
  val->add_option("--exits", val_a.exits, "walk-on-spheres exits");
  val->add_option("--M", val_a.M, "grid size");

  auto* fig = app.add_subcommand("figure3", "long sunflower run with snapshots and a diameter series");
  add_common(fig, fig_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*sim) return run_simulate(sim_c, sim_o);
    if (*ode) return run_ode(ode_c);
    if (*inv) return run_invariant(inv_c, inv_a);
    if (*sweep) return run_sweep(sweep_c);
    if (*shape) return run_shape_rescale(shape_c);
    if (*lat) return run_lattice_cmd(lat_c, lat_a);
    if (*val) return run_validate(val_c, val_a);
    if (*fig) return run_figure3(fig_c);
  } catch (const MonitorTriggered& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExpectFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
