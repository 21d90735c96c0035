#pragma once
// The growth process (R_t, x_t): exponential clock, bump deposition, particle transport
// and the runtime monitors.

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "growth/rules.hpp"

namespace growth {

struct GrowthState {
  RadialField r;
  Vec x{};
  double t = 0.0;
  std::size_t jumps = 0;
  std::size_t clamps = 0;
  std::size_t floored = 0;        // jumps whose eta was raised to the grid floor
  std::size_t under_sampled = 0;  // harmonic-mc batches below 1000 exits
  std::size_t outside = 0;        // statistical centre outside r~
  // harmonic-mc: last y estimate and jumps since it was taken
  double y_cache = 0.0;
  std::size_t since_refresh = 0;
};

struct JumpRecord {
  double t = 0.0;
  Vec xi{};
  double eta = 0.0;
  double y = 0.0;
  double dleb = 0.0;
  double min_density = std::numeric_limits<double>::quiet_NaN();
};

struct Monitors {
  double delta_density = 0.0;  // trigger when min F < delta_density
  double delta_radius = 0.0;   // trigger when sup r > 1 / delta_radius (0 disables)
  bool density_triggered = false;
  bool radius_triggered = false;
  double density_time = std::numeric_limits<double>::quiet_NaN();
  double radius_time = std::numeric_limits<double>::quiet_NaN();

  bool any() const { return density_triggered || radius_triggered; }
};

// Sets flags the first time a threshold is crossed; earlier trigger times are kept.
// min_density is the smallest node value of the current hitting density (NaN if unknown).
Monitors check_monitors(const GrowthState& s, double min_density, Monitors m);
// Evaluates the density itself; the density monitor is skipped for harmonic-mc rules.
Monitors check_monitors(const GrowthState& s, const RuleEngine& engine, Monitors m);

enum class ClockMode {
  exponential,  // Exp(1/eps) holding times
  fixed,        // holding time eps; not the canonical process
};

struct ProcessOptions {
  double eps = 1e-3;
  ResolutionPolicy policy = ResolutionPolicy::strict;
  ClockMode clock = ClockMode::exponential;
  Profile bump_profile = cosine_profile();
};

class JumpProcess {
 public:
  JumpProcess(const RuleEngine& engine, ProcessOptions opts);

  const RuleEngine& engine() const { return engine_; }
  const ProcessOptions& options() const { return opts_; }

  GrowthState initial_state(RadialField r0, Vec x0) const;

  // One jump. The holding time is drawn before the hitting direction.
  // forced_xi replaces the sampled angle after the draw, so the stream stays aligned.
  JumpRecord step(GrowthState& s, Stream& rng, const Vec* forced_xi = nullptr);

  // Quantized kernel for a given eta (relative quantum 1e-3).
  const BumpKernel& kernel(double eta);
  std::size_t cached_kernels() const { return cache_.size(); }

 private:
  const RuleEngine& engine_;
  ProcessOptions opts_;
  std::map<long, BumpKernel> cache_;
};

enum class SnapshotSpacing { geometric, uniform };

struct SnapshotPlan {
  SnapshotSpacing spacing = SnapshotSpacing::geometric;
  std::size_t count = 50;
  double first_fraction = 1e-3;  // geometric: first positive time is first_fraction * T
  std::vector<double> custom;    // explicit increasing times in [0, T]; overrides spacing

  std::vector<double> times(double T) const;
};

struct SimulateOptions {
  double T = 1.0;
  SnapshotPlan plan;
  Monitors monitors;
  bool strict = false;       // a monitor trigger throws MonitorTriggered
  bool record_jumps = true;  // keep the per-jump log and particle track
  // Jump i hits at replay_xi[i] instead of its sampled angle; later jumps sample normally.
  std::vector<Vec> replay_xi;
};

struct Trajectory {
  std::vector<double> snapshot_times;
  std::vector<RadialField> snapshots;
  std::vector<double> particle_t;
  std::vector<Vec> particle_x;
  std::vector<JumpRecord> jumps;
  Monitors monitors;
  GrowthState final_state;
  double leb0 = 0.0;
  double dleb_total = 0.0;
  int dim = 2;
};

Trajectory simulate(JumpProcess& process, RadialField r0, Vec x0, const SimulateOptions& opts, Stream& rng);

std::vector<Vec> xi_sequence(const Trajectory& traj);

// (r, x, t) -> (c r, c x, c^n t); jump logs scale y by c^{n-1} and dleb by c^n.
Trajectory rescale_trajectory(const Trajectory& traj, double c);

// Field value at time t from the held (cadlag) snapshots; t must lie in the snapshot range.
const RadialField& held_snapshot(const Trajectory& traj, double t);

// meta.json, snapshots.csv, particle.csv, jumps.csv, monitors.json
void write_trajectory(const std::string& dir, const Trajectory& traj, const nlohmann::ordered_json& meta);
nlohmann::ordered_json monitors_to_json(const Monitors& m);

}  // namespace growth
