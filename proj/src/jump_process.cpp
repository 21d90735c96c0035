#include "growth/jump_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "growth/errors.hpp"
#include "growth/io.hpp"

namespace growth {

namespace {
const double kLogQuantum = std::log1p(1e-3);
}

Monitors check_monitors(const GrowthState& s, double min_density, Monitors m) {
  if (!m.radius_triggered && m.delta_radius > 0 && s.r.max() > 1.0 / m.delta_radius) {
    m.radius_triggered = true;
    m.radius_time = s.t;
  }
  if (!m.density_triggered && std::isfinite(min_density) && min_density < m.delta_density) {
    m.density_triggered = true;
    m.density_time = s.t;
  }
  return m;
}

Monitors check_monitors(const GrowthState& s, const RuleEngine& engine, Monitors m) {
  double min_density = std::numeric_limits<double>::quiet_NaN();
  if (engine.rules().exact_density()) {
    const Domain d = engine.domain(s.r);
    min_density = engine.eval_density(d, s.x).values.min();
  }
  return check_monitors(s, min_density, m);
}

JumpProcess::JumpProcess(const RuleEngine& engine, ProcessOptions opts) : engine_(engine), opts_(std::move(opts)) {
  if (!(opts_.eps > 0)) throw InvalidArgument("eps must be positive");
}

GrowthState JumpProcess::initial_state(RadialField r0, Vec x0) const {
  GrowthState s;
  const Domain d = engine_.domain(r0);
  if (engine_.rules().exact_density()) {
    engine_.eval_density(d, x0);
  } else {
    engine_.check_interior(d, x0);
  }
  s.r = std::move(r0);
  s.x = x0;
  return s;
}

const BumpKernel& JumpProcess::kernel(double eta) {
  const long key = std::lround(std::log(eta) / kLogQuantum);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    const double q = std::min(1.0, std::exp(static_cast<double>(key) * kLogQuantum));
    it = cache_.emplace(key, make_bump_kernel(q, engine_.grid_ptr(), opts_.bump_profile)).first;
  }
  return it->second;
}

JumpRecord JumpProcess::step(GrowthState& s, Stream& rng, const Vec* forced_xi) {
  JumpRecord rec;
  const double hold = opts_.clock == ClockMode::exponential ? opts_.eps * rng.exponential() : opts_.eps;
  const Domain d = engine_.domain(s.r);

  if (const auto* mc = std::get_if<HarmonicMcHit>(&engine_.rules().F)) {
    rec.xi = engine_.sample_angle(d, s.x, rng);
    if (s.since_refresh == 0 || s.since_refresh >= mc->refresh_every) {
      s.y_cache = engine_.y_monte_carlo(d, s.x, mc->n_exits, rng);
      s.since_refresh = 0;
      if (mc->n_exits < 1000) ++s.under_sampled;
    }
    ++s.since_refresh;
    rec.y = s.y_cache;
  } else {
    const Density dens = engine_.eval_density(d, s.x);
    rec.xi = engine_.sample_from_density(dens.values, rng.uniform());
    rec.y = y_factor(s.r, dens.values);
    rec.min_density = dens.values.min();
  }
  if (forced_xi) rec.xi = *forced_xi;

  const BumpScale bs = bump_scale(opts_.eps, rec.y, *engine_.grid_ptr(), opts_.policy);
  if (bs.floored) ++s.floored;
  const BumpKernel& k = kernel(bs.eta);
  rec.eta = k.eta();

  const TransportResult tr = engine_.transport(d, rec.xi);
  if (tr.clamped) ++s.clamps;
  if (tr.outside) ++s.outside;

  add_bump_inplace(s.r, rec.xi, opts_.eps / rec.y, k, &rec.dleb);
  s.x = tr.x;
  s.t += hold;
  ++s.jumps;
  rec.t = s.t;
  return rec;
}

std::vector<double> SnapshotPlan::times(double T) const {
  if (!custom.empty()) {
    for (std::size_t k = 0; k < custom.size(); ++k) {
      if (custom[k] < 0 || custom[k] > T || (k > 0 && !(custom[k] > custom[k - 1])))
        throw InvalidArgument("custom snapshot times must increase within [0, T]");
    }
    return custom;
  }
  if (count < 2) throw InvalidArgument("snapshot plan needs at least two times");
  std::vector<double> out(count);
  out[0] = 0.0;
  for (std::size_t k = 1; k < count; ++k) {
    const double u = static_cast<double>(k - 1) / static_cast<double>(count - 2 == 0 ? 1 : count - 2);
    if (spacing == SnapshotSpacing::uniform) {
      out[k] = T * static_cast<double>(k) / static_cast<double>(count - 1);
    } else {
      out[k] = count == 2 ? T : T * std::pow(first_fraction, 1.0 - u);
    }
  }
  out.back() = T;
  return out;
}

Trajectory simulate(JumpProcess& process, RadialField r0, Vec x0, const SimulateOptions& opts, Stream& rng) {
  if (!(opts.T > 0)) throw InvalidArgument("horizon T must be positive");
  Trajectory traj;
  traj.dim = r0.grid().dim();
  traj.leb0 = leb_volume(r0);
  GrowthState s = process.initial_state(std::move(r0), x0);
  traj.monitors = check_monitors(s, process.engine(), opts.monitors);
  traj.particle_t.push_back(0.0);
  traj.particle_x.push_back(s.x);

  const std::vector<double> times = opts.plan.times(opts.T);
  std::size_t next = 0;
  auto take_snapshots = [&](double before) {
    while (next < times.size() && times[next] < before) {
      traj.snapshot_times.push_back(times[next]);
      traj.snapshots.push_back(s.r);
      ++next;
    }
  };
  auto fail_if_strict = [&] {
    if (opts.strict && traj.monitors.any()) {
      throw MonitorTriggered(traj.monitors.radius_triggered ? "radius monitor triggered at t = " +
                                                                  io::format_double(traj.monitors.radius_time)
                                                            : "density monitor triggered at t = " +
                                                                  io::format_double(traj.monitors.density_time));
    }
  };
  fail_if_strict();

  for (;;) {
    GrowthState trial = s;
    Stream saved = rng;
    const Vec* forced = s.jumps < opts.replay_xi.size() ? &opts.replay_xi[s.jumps] : nullptr;
    const JumpRecord rec = process.step(trial, rng, forced);
    if (rec.t > opts.T) {
      rng = saved;
      break;
    }
    take_snapshots(rec.t);
    s = std::move(trial);
    traj.dleb_total += rec.dleb;
    traj.monitors = check_monitors(s, rec.min_density, traj.monitors);
    fail_if_strict();
    if (opts.record_jumps) {
      traj.jumps.push_back(rec);
      traj.particle_t.push_back(rec.t);
      traj.particle_x.push_back(s.x);
    }
  }
  take_snapshots(std::numeric_limits<double>::infinity());
  s.t = opts.T;
  traj.final_state = std::move(s);
  return traj;
}

std::vector<Vec> xi_sequence(const Trajectory& traj) {
  std::vector<Vec> out;
  out.reserve(traj.jumps.size());
  for (const JumpRecord& j : traj.jumps) out.push_back(j.xi);
  return out;
}

Trajectory rescale_trajectory(const Trajectory& traj, double c) {
  if (!(c > 0)) throw InvalidArgument("rescale factor must be positive");
  const double cn = std::pow(c, traj.dim);
  const double cn1 = std::pow(c, traj.dim - 1);
  Trajectory out = traj;
  for (double& t : out.snapshot_times) t *= cn;
  for (RadialField& f : out.snapshots) f = f.scaled(c);
  for (double& t : out.particle_t) t *= cn;
  for (Vec& x : out.particle_x) x = scaled(x, c);
  for (JumpRecord& j : out.jumps) {
    j.t *= cn;
    j.y *= cn1;
    j.dleb *= cn;
  }
  out.final_state.r = traj.final_state.r.scaled(c);
  out.final_state.x = scaled(traj.final_state.x, c);
  out.final_state.t *= cn;
  out.final_state.y_cache *= cn1;
  out.monitors.radius_time *= cn;
  out.monitors.density_time *= cn;
  out.leb0 *= cn;
  out.dleb_total *= cn;
  return out;
}

const RadialField& held_snapshot(const Trajectory& traj, double t) {
  if (traj.snapshots.empty() || t < traj.snapshot_times.front())
    throw InvalidArgument("time precedes the first snapshot");
  const auto it = std::upper_bound(traj.snapshot_times.begin(), traj.snapshot_times.end(), t);
  return traj.snapshots[static_cast<std::size_t>(it - traj.snapshot_times.begin()) - 1];
}

nlohmann::ordered_json monitors_to_json(const Monitors& m) {
  auto time = [](bool set, double t) { return set ? nlohmann::ordered_json(t) : nlohmann::ordered_json(nullptr); };
  return {{"delta_density", m.delta_density},
          {"delta_radius", m.delta_radius},
          {"density_triggered", m.density_triggered},
          {"density_time", time(m.density_triggered, m.density_time)},
          {"radius_triggered", m.radius_triggered},
          {"radius_time", time(m.radius_triggered, m.radius_time)}};
}

void write_trajectory(const std::string& dir, const Trajectory& traj, const nlohmann::ordered_json& meta) {
  namespace fs = std::filesystem;
  io::ensure_directory(dir);
  const fs::path root(dir);
  using io::format_double;

  std::string snap = "t,theta_index,r\n";
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const std::string t = format_double(traj.snapshot_times[k]);
    const RadialField& f = traj.snapshots[k];
    for (std::size_t j = 0; j < f.size(); ++j) snap += t + "," + std::to_string(j) + "," + format_double(f[j]) + "\n";
  }
  io::write_atomic((root / "snapshots.csv").string(), snap);

  std::string part = traj.dim == 2 ? "t,x1,x2\n" : "t,x1,x2,x3\n";
  for (std::size_t k = 0; k < traj.particle_t.size(); ++k) {
    part += format_double(traj.particle_t[k]);
    for (int i = 0; i < traj.dim; ++i) part += "," + format_double(traj.particle_x[k][i]);
    part += "\n";
  }
  io::write_atomic((root / "particle.csv").string(), part);

  std::string jumps = "t,xi_angle,eta,y,dleb\n";
  for (const JumpRecord& j : traj.jumps) {
    const double angle = std::atan2(j.xi[1], j.xi[0]);
    jumps += format_double(j.t) + "," + format_double(angle) + "," + format_double(j.eta) + "," + format_double(j.y) +
             "," + format_double(j.dleb) + "\n";
  }
  io::write_atomic((root / "jumps.csv").string(), jumps);

  nlohmann::ordered_json mon = monitors_to_json(traj.monitors);
  const GrowthState& s = traj.final_state;
  mon["counters"] = {{"jumps", s.jumps},
                     {"clamps", s.clamps},
                     {"eta_floored", s.floored},
                     {"under_sampled", s.under_sampled},
                     {"center_outside", s.outside}};
  io::write_atomic((root / "monitors.json").string(), mon.dump(2) + "\n");
  io::write_atomic((root / "meta.json").string(), meta.dump(2) + "\n");
}

}  // namespace growth
