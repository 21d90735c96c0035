#include "growth/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "growth/config.hpp"
#include "growth/errors.hpp"
#include "growth/io.hpp"
#include "growth/shapes.hpp"
#include "growth/stats.hpp"

namespace growth {

using nlohmann::json;
using nlohmann::ordered_json;

ResolutionPolicy policy_from_name(const std::string& name) {
  if (name == "strict") return ResolutionPolicy::strict;
  if (name == "floor") return ResolutionPolicy::floor;
  throw ConfigError("unknown resolution policy '" + name + "'");
}

std::string policy_name(ResolutionPolicy p) { return p == ResolutionPolicy::strict ? "strict" : "floor"; }

namespace {

EstimatorConfig estimator_from_json(const json& j, EstimatorConfig e) {
  config::check_keys(j, {"kind", "burn", "len", "batches", "starts"}, "estimator");
  if (j.contains("kind")) e.kind = estimator_from_name(j.at("kind").get<std::string>());
  e.burn = config::get_or(j, "burn", e.burn, "estimator");
  e.len = config::get_or(j, "len", e.len, "estimator");
  e.batches = config::get_or(j, "batches", e.batches, "estimator");
  e.starts = config::get_or(j, "starts", e.starts, "estimator");
  return e;
}

ordered_json estimator_to_json(const EstimatorConfig& e) {
  return {{"kind", estimator_name(e.kind)}, {"burn", e.burn}, {"len", e.len}, {"batches", e.batches},
          {"starts", e.starts}};
}

void check_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
}

}  // namespace

MetricSeries l2_distance_series(const Trajectory& a, const OdeTrajectory& b) {
  MetricSeries m;
  double sup = 0.0;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const double t = a.snapshot_times[k];
    const RadialField& r = ode_state_at(b, t);
    if (!r.grid().same_as(a.snapshots[k].grid())) throw GridMismatch("trajectory and ODE use different grids");
    const double d = l2_distance(a.snapshots[k], r);
    sup = std::max(sup, d);
    m.times.push_back(t);
    m.values.push_back(d);
    m.running_sup.push_back(sup);
  }
  return m;
}

SweepConfig sweep_config_from_json(const json& j) {
  config::check_keys(j, {"command", "rules", "n", "M", "shape", "x0", "eps", "seeds", "T", "snapshots", "ode_dt",
                         "estimator", "policy", "monitors", "expect"},
                     "sweep");
  SweepConfig c;
  if (j.contains("rules")) c.rules = rules_from_json(j.at("rules"));
  if (config::get_or(j, "n", 2, "sweep") != 2) throw ConfigError("sweep: only n = 2 is supported");
  c.M = config::get_or(j, "M", c.M, "sweep");
  if (j.contains("shape")) c.shape = j.at("shape");
  if (j.contains("x0")) c.x0 = config::point_from_json(j.at("x0"));
  c.eps = config::get_or(j, "eps", c.eps, "sweep");
  c.seeds = config::get_or(j, "seeds", c.seeds, "sweep");
  c.T = config::get_or(j, "T", c.T, "sweep");
  c.snapshots = config::get_or(j, "snapshots", c.snapshots, "sweep");
  c.ode_dt = config::get_or(j, "ode_dt", c.ode_dt, "sweep");
  if (j.contains("estimator")) c.estimator = estimator_from_json(j.at("estimator"), c.estimator);
  if (j.contains("policy")) c.policy = policy_from_name(j.at("policy").get<std::string>());
  if (j.contains("monitors")) {
    const auto& m = j.at("monitors");
    config::check_keys(m, {"delta_density", "delta_radius"}, "sweep.monitors");
    c.monitors.delta_density = config::get_or(m, "delta_density", 0.0, "sweep.monitors");
    c.monitors.delta_radius = config::get_or(m, "delta_radius", 0.0, "sweep.monitors");
  }
  if (j.contains("expect")) {
    const auto& e = j.at("expect");
    config::check_keys(e, {"monotone", "sign_alpha", "envelope"}, "sweep.expect");
    c.expect.monotone = config::get_or(e, "monotone", false, "sweep.expect");
    c.expect.sign_alpha = config::get_or(e, "sign_alpha", c.expect.sign_alpha, "sweep.expect");
    if (e.contains("envelope")) {
      for (const auto& pair : e.at("envelope")) {
        const auto v = pair.get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("sweep.expect.envelope: entries are [eps, bound]");
        c.expect.envelope[v[0]] = v[1];
      }
    }
  }
  if (c.eps.empty()) throw ConfigError("sweep: eps list is empty");
  for (std::size_t k = 0; k < c.eps.size(); ++k) {
    if (!(c.eps[k] > 0)) throw ConfigError("sweep: eps must be positive");
    if (k > 0 && !(c.eps[k] < c.eps[k - 1])) throw ConfigError("sweep: eps list must be strictly decreasing");
  }
  check_seeds(c.seeds);
  if (!(c.T > 0) || !(c.ode_dt > 0)) throw ConfigError("sweep: T and ode_dt must be positive");
  return c;
}

ordered_json sweep_config_to_json(const SweepConfig& c) {
  ordered_json env = ordered_json::array();
  for (const auto& [e, b] : c.expect.envelope) env.push_back({e, b});
  return {{"command", "sweep"},
          {"rules", rules_to_json(c.rules)},
          {"n", 2},
          {"M", c.M},
          {"shape", c.shape},
          {"x0", config::point_to_json(c.x0, 2)},
          {"eps", c.eps},
          {"seeds", c.seeds},
          {"T", c.T},
          {"snapshots", c.snapshots},
          {"ode_dt", c.ode_dt},
          {"estimator", estimator_to_json(c.estimator)},
          {"policy", policy_name(c.policy)},
          {"monitors", {{"delta_density", c.monitors.delta_density}, {"delta_radius", c.monitors.delta_radius}}},
          {"expect", {{"monotone", c.expect.monotone}, {"sign_alpha", c.expect.sign_alpha}, {"envelope", env}}}};
}

SweepResult averaging_sweep(const SweepConfig& cfg) {
  const GridPtr grid = make_grid(2, cfg.M);
  const RadialField r0 = cfg.r0.size() == cfg.M ? cfg.r0 : shape_from_json(cfg.shape, grid);
  if (!r0.grid().same_as(*grid)) throw GridMismatch("sweep: r0 is on another grid");
  const RuleEngine engine(cfg.rules, r0.grid_ptr());

  Stream ode_rng(0, "sweep-ode");
  OdeOptions oo;
  oo.T = cfg.T;
  oo.dt = cfg.ode_dt;
  const OdeTrajectory ode = integrate_ode(engine, r0, oo, cfg.estimator, ode_rng);

  SweepResult res;
  std::map<double, std::map<std::uint64_t, double>> by_eps;
  for (double eps : cfg.eps) {
    ProcessOptions po;
    po.eps = eps;
    po.policy = cfg.policy;
    JumpProcess proc(engine, po);
    for (std::uint64_t seed : cfg.seeds) {
      Stream rng(seed, "sweep");
      SimulateOptions so;
      so.T = cfg.T;
      so.plan.spacing = SnapshotSpacing::uniform;
      so.plan.count = cfg.snapshots;
      so.monitors = cfg.monitors;
      so.record_jumps = false;
      const Trajectory traj = simulate(proc, r0, cfg.x0, so, rng);
      SweepRow row;
      row.eps = eps;
      row.seed = seed;
      row.sup_l2 = l2_distance_series(traj, ode).sup();
      row.radius_triggered = traj.monitors.radius_triggered;
      row.density_triggered = traj.monitors.density_triggered;
      row.jumps = traj.final_state.jumps;
      row.floored = traj.final_state.floored;
      row.clamps = traj.final_state.clamps;
      by_eps[eps][seed] = row.sup_l2;
      res.rows.push_back(row);
    }
  }

  for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
    const double eps = cfg.eps[k];
    std::vector<double> v;
    for (const auto& [seed, sup] : by_eps[eps]) v.push_back(sup);
    SweepLevel lv;
    lv.eps = eps;
    lv.median = stats::median(v);
    lv.iqr = stats::iqr(v);
    if (auto it = cfg.expect.envelope.find(eps); it != cfg.expect.envelope.end()) {
      lv.envelope = it->second;
      lv.within_envelope = lv.median <= it->second;
      if (!lv.within_envelope)
        res.failures.push_back("eps " + io::format_double(eps) + ": median " + io::format_double(lv.median) +
                               " exceeds envelope " + io::format_double(it->second));
    }
    if (k > 0) {
      const auto& prev = by_eps[cfg.eps[k - 1]];
      for (const auto& [seed, sup] : by_eps[eps]) lv.improved += sup < prev.at(seed) ? 1 : 0;
      lv.sign_p = stats::sign_test_p(lv.improved, cfg.seeds.size());
      const double prev_median = res.levels.back().median;
      if (!(lv.median < prev_median)) {
        res.medians_decreasing = false;
        res.failures.push_back("median at eps " + io::format_double(eps) + " does not decrease");
      }
      if (lv.sign_p > cfg.expect.sign_alpha) {
        res.sign_tests_pass = false;
        res.failures.push_back("sign test at eps " + io::format_double(eps) + ": p = " + io::format_double(lv.sign_p));
      }
    }
    res.levels.push_back(lv);
  }
  res.expectations_met = std::all_of(res.levels.begin(), res.levels.end(), [](const SweepLevel& l) { return l.within_envelope; });
  if (cfg.expect.monotone) res.expectations_met = res.expectations_met && res.medians_decreasing && res.sign_tests_pass;
  return res;
}

void write_sweep(const std::string& dir, const SweepConfig& cfg, const SweepResult& res) {
  io::ensure_directory(dir);
  const std::filesystem::path root(dir);
  std::string csv = "epsilon,seed,sup_l2,radius_triggered,density_triggered,jumps,eta_floored,clamps\n";
  for (const SweepRow& r : res.rows) {
    csv += io::format_double(r.eps) + "," + std::to_string(r.seed) + "," + io::format_double(r.sup_l2) + "," +
           (r.radius_triggered ? "1" : "0") + "," + (r.density_triggered ? "1" : "0") + "," + std::to_string(r.jumps) +
           "," + std::to_string(r.floored) + "," + std::to_string(r.clamps) + "\n";
  }
  io::write_atomic((root / "sweep_results.csv").string(), csv);
  ordered_json levels = ordered_json::array();
  for (const SweepLevel& l : res.levels) {
    ordered_json o = {{"epsilon", l.eps}, {"median_sup_l2", l.median}, {"iqr_sup_l2", l.iqr}};
    if (l.envelope) {
      o["envelope"] = *l.envelope;
      o["within_envelope"] = l.within_envelope;
    }
    o["improved_vs_previous"] = l.improved;
    o["sign_test_p"] = l.sign_p;
    levels.push_back(o);
  }
  ordered_json summary = {{"config", sweep_config_to_json(cfg)},
                          {"levels", levels},
                          {"medians_decreasing", res.medians_decreasing},
                          {"sign_tests_pass", res.sign_tests_pass},
                          {"expectations_met", res.expectations_met},
                          {"failures", res.failures}};
  io::write_atomic((root / "sweep_summary.json").string(), summary.dump(2) + "\n");
}

ShapeRescaleConfig shape_rescale_config_from_json(const json& j) {
  config::check_keys(j, {"command", "rules", "n", "M", "shape", "c", "T", "samples", "N", "seeds", "policy", "check_coupling"},
                     "shape-rescale");
  ShapeRescaleConfig c;
  if (j.contains("rules")) c.rules = rules_from_json(j.at("rules"));
  if (config::get_or(j, "n", 2, "shape-rescale") != 2) throw ConfigError("shape-rescale: only n = 2 is supported");
  c.M = config::get_or(j, "M", c.M, "shape-rescale");
  if (j.contains("shape")) c.shape = j.at("shape");
  c.c = config::get_or(j, "c", c.c, "shape-rescale");
  c.T = config::get_or(j, "T", c.T, "shape-rescale");
  c.samples = config::get_or(j, "samples", c.samples, "shape-rescale");
  c.N = config::get_or(j, "N", c.N, "shape-rescale");
  c.seeds = config::get_or(j, "seeds", c.seeds, "shape-rescale");
  if (j.contains("policy")) c.policy = policy_from_name(j.at("policy").get<std::string>());
  c.check_coupling = config::get_or(j, "check_coupling", c.check_coupling, "shape-rescale");
  check_seeds(c.seeds);
  if (!(c.c > 0) || !(c.T > 1) || c.samples < 2) throw ConfigError("shape-rescale: need c > 0, T > 1, samples >= 2");
  for (double n : c.N)
    if (!(n > 0)) throw ConfigError("shape-rescale: N must be positive");
  return c;
}

ordered_json shape_rescale_config_to_json(const ShapeRescaleConfig& c) {
  return {{"command", "shape-rescale"}, {"rules", rules_to_json(c.rules)}, {"n", 2}, {"M", c.M},
          {"shape", c.shape},           {"c", c.c},                        {"T", c.T}, {"samples", c.samples},
          {"N", c.N},                   {"seeds", c.seeds},                {"policy", policy_name(c.policy)},
          {"check_coupling", c.check_coupling}};
}

ShapeRescaleResult shape_rescale_experiment(const ShapeRescaleConfig& cfg) {
  if (!cfg.rules.scale_invariant()) throw InvalidArgument("shape-rescale needs a scale-invariant rule set");
  const GridPtr grid = make_grid(2, cfg.M);
  const RadialField psi = with_volume(shape_from_json(cfg.shape, grid), 1.0);
  const RuleEngine engine(cfg.rules, grid);
  const int n = 2;
  std::vector<double> s_grid(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i)
    s_grid[i] = 1.0 + (cfg.T - 1.0) * static_cast<double>(i) / static_cast<double>(cfg.samples - 1);

  auto metric = [&](const Trajectory& traj, double time_scale, double N) {
    double sup = 0.0;
    for (double s : s_grid) {
      const RadialField& r = held_snapshot(traj, s * time_scale);
      sup = std::max(sup, l2_distance(r.scaled(std::pow(N * (cfg.c + s), -1.0 / n)), psi));
    }
    return sup;
  };

  ShapeRescaleResult res;
  for (double N : cfg.N) {
    ShapeRescaleLevel lv;
    lv.N = N;
    for (std::uint64_t seed : cfg.seeds) {
      ProcessOptions po;
      po.eps = 1.0;
      po.policy = cfg.policy;
      JumpProcess one(engine, po);
      SimulateOptions so;
      so.T = cfg.T * N;
      so.record_jumps = cfg.check_coupling;
      so.plan.custom.push_back(0.0);
      for (double s : s_grid) so.plan.custom.push_back(s * N);
      Stream rng(seed, "shape-rescale");
      const Trajectory t1 = simulate(one, psi.scaled(std::pow(cfg.c * N, 1.0 / n)), Vec{0, 0, 0}, so, rng);
      const double m1 = metric(t1, N, N);
      lv.metric.push_back(m1);
      if (cfg.check_coupling) {
        po.eps = 1.0 / N;
        JumpProcess small(engine, po);
        SimulateOptions se = so;
        se.T = cfg.T;
        se.record_jumps = false;
        se.replay_xi = xi_sequence(t1);
        se.plan.custom = {0.0};
        for (double s : s_grid) se.plan.custom.push_back(s);
        Stream rng2(seed, "shape-rescale");
        const Trajectory te = simulate(small, psi.scaled(std::pow(cfg.c, 1.0 / n)), Vec{0, 0, 0}, se, rng2);
        lv.coupling_gap = std::max(lv.coupling_gap, std::abs(metric(te, 1.0, 1.0) - m1));
      }
    }
    lv.median = stats::median(lv.metric);
    if (!res.levels.empty() && !(lv.median < res.levels.back().median)) res.decreasing = false;
    res.levels.push_back(std::move(lv));
  }
  return res;
}

void write_shape_rescale(const std::string& dir, const ShapeRescaleConfig& cfg, const ShapeRescaleResult& res) {
  io::ensure_directory(dir);
  const std::filesystem::path root(dir);
  std::string csv = "N,seed,metric\n";
  ordered_json levels = ordered_json::array();
  for (const auto& lv : res.levels) {
    for (std::size_t k = 0; k < lv.metric.size(); ++k)
      csv += io::format_double(lv.N) + "," + std::to_string(cfg.seeds[k]) + "," + io::format_double(lv.metric[k]) + "\n";
    levels.push_back({{"N", lv.N}, {"median_metric", lv.median}, {"coupling_gap", lv.coupling_gap}});
  }
  io::write_atomic((root / "shape_rescale.csv").string(), csv);
  const ordered_json summary = {{"config", shape_rescale_config_to_json(cfg)}, {"levels", levels}, {"decreasing", res.decreasing}};
  io::write_atomic((root / "shape_rescale_summary.json").string(), summary.dump(2) + "\n");
}

Figure3Config figure3_config_from_json(const json& j) {
  config::check_keys(j, {"command", "rules", "n", "M", "shape", "eps", "T", "snapshots", "seed", "policy"}, "figure3");
  Figure3Config c;
  if (j.contains("rules")) c.rules = rules_from_json(j.at("rules"));
  if (config::get_or(j, "n", 2, "figure3") != 2) throw ConfigError("figure3: only n = 2 is supported");
  c.M = config::get_or(j, "M", c.M, "figure3");
  if (j.contains("shape")) c.shape = j.at("shape");
  c.eps = config::get_or(j, "eps", c.eps, "figure3");
  c.T = config::get_or(j, "T", c.T, "figure3");
  c.snapshots = config::get_or(j, "snapshots", c.snapshots, "figure3");
  c.seed = config::get_or(j, "seed", c.seed, "figure3");
  if (j.contains("policy")) c.policy = policy_from_name(j.at("policy").get<std::string>());
  if (!(c.eps > 0) || !(c.T > 0)) throw ConfigError("figure3: eps and T must be positive");
  return c;
}

ordered_json figure3_config_to_json(const Figure3Config& c) {
  return {{"command", "figure3"}, {"rules", rules_to_json(c.rules)}, {"n", 2},          {"M", c.M},
          {"shape", c.shape},     {"eps", c.eps},                    {"T", c.T},        {"snapshots", c.snapshots},
          {"seed", c.seed},       {"policy", policy_name(c.policy)}};
}

Figure3Result figure3_run(const Figure3Config& cfg) {
  const GridPtr grid = make_grid(2, cfg.M);
  const RadialField r0 = shape_from_json(cfg.shape, grid);
  const RuleEngine engine(cfg.rules, grid);
  ProcessOptions po;
  po.eps = cfg.eps;
  po.policy = cfg.policy;
  JumpProcess proc(engine, po);
  SimulateOptions so;
  so.T = cfg.T;
  so.plan.spacing = SnapshotSpacing::uniform;
  so.plan.count = cfg.snapshots;
  if (cfg.T > 4.0) {
    for (double t : so.plan.times(cfg.T)) so.plan.custom.push_back(t);
    if (!std::binary_search(so.plan.custom.begin(), so.plan.custom.end(), 4.0)) {
      so.plan.custom.push_back(4.0);
      std::sort(so.plan.custom.begin(), so.plan.custom.end());
    }
  }
  Stream rng(cfg.seed, "figure3");
  Figure3Result res;
  res.trajectory = simulate(proc, r0, Vec{0, 0, 0}, so, rng);
  const Trajectory& tr = res.trajectory;
  const std::size_t M = cfg.M;
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const RadialField& r = tr.snapshots[k];
    double diam = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const Vec& z = grid->node(j);
      diam = std::max(diam, r[j] + r.at(Vec{-z[0], -z[1], 0.0}));
    }
    res.times.push_back(tr.snapshot_times[k]);
    res.max_radius.push_back(r.max());
    res.diameter.push_back(diam);
    res.normalized_osc.push_back(oscillation(normalized_profile(r, tr.snapshot_times[k], tr.leb0)));
  }
  if (cfg.T > 4.0) {
    const auto it = std::find(res.times.begin(), res.times.end(), 4.0);
    const double ref = res.diameter[static_cast<std::size_t>(it - res.times.begin())] / 2.0;
    res.sqrt_growth_ok = true;
    for (std::size_t k = 0; k < res.times.size(); ++k) {
      if (res.times[k] < 4.0) continue;
      const double ratio = res.diameter[k] / std::sqrt(res.times[k]) / ref;
      if (ratio < 0.5 || ratio > 2.0) res.sqrt_growth_ok = false;
    }
  }
  return res;
}

void write_figure3(const std::string& dir, const Figure3Config& cfg, const Figure3Result& res) {
  ordered_json meta = figure3_config_to_json(cfg);
  write_trajectory(dir, res.trajectory, meta);
  std::string csv = "t,max_radius,diameter,normalized_osc\n";
  for (std::size_t k = 0; k < res.times.size(); ++k)
    csv += io::format_double(res.times[k]) + "," + io::format_double(res.max_radius[k]) + "," +
           io::format_double(res.diameter[k]) + "," + io::format_double(res.normalized_osc[k]) + "\n";
  io::write_atomic((std::filesystem::path(dir) / "diameter.csv").string(), csv);
  const ordered_json flags = {{"sqrt_growth_ok", res.sqrt_growth_ok}};
  io::write_atomic((std::filesystem::path(dir) / "figure3_flags.json").string(), flags.dump(2) + "\n");
}

}  // namespace growth
