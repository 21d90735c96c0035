#pragma once
// Averaging sweeps, shape rescaling runs and long snapshot runs with a diameter series.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "growth/averaged_ode.hpp"
#include "growth/jump_process.hpp"

namespace growth {

struct MetricSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> running_sup;
  double sup() const { return running_sup.empty() ? 0.0 : running_sup.back(); }
};

// ||R_t - r_t||_2 at the trajectory snapshot times, the ODE held at its last step <= t.
MetricSeries l2_distance_series(const Trajectory& a, const OdeTrajectory& b);

struct SweepExpect {
  bool monotone = false;
  double sign_alpha = 0.05;               // one-sided sign test level per consecutive pair
  std::map<double, double> envelope;      // eps -> bound on the median sup distance
};

struct SweepConfig {
  RuleSet rules;
  std::size_t M = 1024;
  RadialField r0;  // on a grid of size M; built by the caller or from shape
  nlohmann::json shape = "ball";
  Vec x0{};
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double T = 1.0;
  std::size_t snapshots = 101;
  double ode_dt = 1e-2;
  EstimatorConfig estimator{EstimatorKind::transfer_matrix};
  ResolutionPolicy policy = ResolutionPolicy::floor;
  Monitors monitors;
  SweepExpect expect;
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json sweep_config_to_json(const SweepConfig& cfg);

struct SweepRow {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double sup_l2 = 0.0;
  bool radius_triggered = false;
  bool density_triggered = false;
  std::size_t jumps = 0;
  std::size_t floored = 0;
  std::size_t clamps = 0;
};

struct SweepLevel {
  double eps = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  std::optional<double> envelope;
  bool within_envelope = true;
  // against the previous (larger) eps: seeds with a smaller sup distance and the sign-test p
  std::size_t improved = 0;
  double sign_p = 1.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepLevel> levels;
  bool medians_decreasing = true;
  bool sign_tests_pass = true;
  bool expectations_met = true;
  std::vector<std::string> failures;
};

SweepResult averaging_sweep(const SweepConfig& cfg);
// sweep_results.csv and sweep_summary.json
void write_sweep(const std::string& dir, const SweepConfig& cfg, const SweepResult& res);

struct ShapeRescaleConfig {
  RuleSet rules;
  std::size_t M = 1024;
  nlohmann::json shape = "ball";  // normalised to Leb = 1
  double c = 1.0;
  double T = 2.0;                 // s ranges over [1, T]
  std::size_t samples = 21;       // s grid points
  std::vector<double> N{1e2, 1e3};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  ResolutionPolicy policy = ResolutionPolicy::floor;
  bool check_coupling = true;
};

ShapeRescaleConfig shape_rescale_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json shape_rescale_config_to_json(const ShapeRescaleConfig& cfg);

struct ShapeRescaleLevel {
  double N = 0.0;
  std::vector<double> metric;  // per seed
  double median = 0.0;
  // largest |metric(scale-1 run) - metric(eps = 1/N run)| over seeds
  double coupling_gap = 0.0;
};

struct ShapeRescaleResult {
  std::vector<ShapeRescaleLevel> levels;
  bool decreasing = true;
};

ShapeRescaleResult shape_rescale_experiment(const ShapeRescaleConfig& cfg);
void write_shape_rescale(const std::string& dir, const ShapeRescaleConfig& cfg, const ShapeRescaleResult& res);

struct Figure3Config {
  RuleSet rules;
  std::size_t M = 1024;
  nlohmann::json shape = {{"name", "sunflower"}, {"k", 6}, {"amp", 0.3}};
  double eps = 1e-3;
  double T = 16.0;
  std::size_t snapshots = 64;
  std::uint64_t seed = 1;
  ResolutionPolicy policy = ResolutionPolicy::floor;
};

Figure3Config figure3_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json figure3_config_to_json(const Figure3Config& cfg);

struct Figure3Result {
  Trajectory trajectory;
  std::vector<double> times;
  std::vector<double> max_radius;
  std::vector<double> diameter;        // max over theta of r(theta) + r(theta + pi)
  std::vector<double> normalized_osc;  // osc of r / (Leb0 + t)^{1/2}
  bool sqrt_growth_ok = false;         // diameter / sqrt(t) within [0.5, 2] of its t = 4 value on [4, T]
};

Figure3Result figure3_run(const Figure3Config& cfg);
void write_figure3(const std::string& dir, const Figure3Config& cfg, const Figure3Result& res);

ResolutionPolicy policy_from_name(const std::string& name);
std::string policy_name(ResolutionPolicy p);

}  // namespace growth
