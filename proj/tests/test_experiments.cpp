#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "growth/errors.hpp"
#include "growth/experiments.hpp"
#include "growth/io.hpp"
#include "growth/shapes.hpp"

using namespace growth;
using nlohmann::json;

TEST_SUITE("experiments") {
  TEST_CASE("identical inputs give a zero distance series") {
    const GridPtr g = make_grid(2, 128);
    Trajectory tr;
    OdeTrajectory ode;
    for (int k = 0; k <= 4; ++k) {
      const RadialField r = sunflower_shape(g, 2, 0.1).scaled(1 + 0.1 * k);
      tr.snapshot_times.push_back(0.25 * k);
      tr.snapshots.push_back(r);
      ode.times.push_back(0.25 * k);
      ode.states.push_back(r);
      ode.stderrs.emplace_back();
    }
    const MetricSeries m = l2_distance_series(tr, ode);
    CHECK(m.sup() == 0.0);
    CHECK(m.values.size() == 5);
    ode.states[2] = RadialField(make_grid(2, 64), 1.0);
    CHECK_THROWS_AS(l2_distance_series(tr, ode), GridMismatch);
  }

  TEST_CASE("sweep config validation") {
    CHECK_THROWS_AS(sweep_config_from_json(json{{"eps", {1e-3, 1e-2}}}), ConfigError);
    CHECK_THROWS_AS(sweep_config_from_json(json{{"seeds", {1, 1}}}), ConfigError);
    CHECK_THROWS_AS(sweep_config_from_json(json{{"bogus", 1}}), ConfigError);
    const SweepConfig c = sweep_config_from_json(json::parse(R"({"expect":{"monotone":true,"envelope":[[0.01,0.5]]}})"));
    CHECK(c.expect.envelope.at(0.01) == 0.5);
    CHECK(sweep_config_to_json(sweep_config_from_json(sweep_config_to_json(c))) == sweep_config_to_json(c));
  }

  TEST_CASE("small sweep is deterministic and monotone") {
    SweepConfig c = sweep_config_from_json(json::parse(R"({
      "rules": {"F": {"variant": "boundary-proportional"}},
      "M": 256, "shape": "ball", "eps": [0.02, 0.002], "seeds": [1, 2, 3, 4, 5], "T": 0.5,
      "snapshots": 26, "ode_dt": 0.02, "estimator": {"kind": "closed-form"},
      "expect": {"monotone": true}})"));
    const SweepResult a = averaging_sweep(c);
    CHECK(a.medians_decreasing);
    CHECK(a.expectations_met);
    const auto base = std::filesystem::temp_directory_path() / "growth_sweep_test";
    std::filesystem::remove_all(base);
    write_sweep((base / "a").string(), c, a);
    write_sweep((base / "b").string(), c, averaging_sweep(c));
    for (const char* f : {"sweep_results.csv", "sweep_summary.json"})
      CHECK(io::read_file((base / "a" / f).string()) == io::read_file((base / "b" / f).string()));
    std::filesystem::remove_all(base);
    c.expect.envelope[0.002] = 1e-9;
    const SweepResult tight = averaging_sweep(c);
    CHECK(!tight.expectations_met);
  }

  TEST_CASE("shape rescale coupling") {
    ShapeRescaleConfig c = shape_rescale_config_from_json(json::parse(R"({
      "rules": {"F": {"variant": "boundary-proportional"}},
      "M": 256, "shape": {"name": "sunflower", "k": 3, "amp": 0.2}, "N": [30, 300], "seeds": [1, 2, 3], "T": 1.5})"));
    const ShapeRescaleResult r = shape_rescale_experiment(c);
    REQUIRE(r.levels.size() == 2);
    CHECK(r.decreasing);
    for (const auto& lv : r.levels) CHECK(lv.coupling_gap < 1e-10);
    c.rules = rules_from_json(json::parse(R"({"H":{"variant":"unit-pull"}})"));
    CHECK_THROWS_AS(shape_rescale_experiment(c), InvalidArgument);
  }

  TEST_CASE("figure3 run produces a diameter series") {
    Figure3Config c = figure3_config_from_json(json::parse(R"({
      "rules": {"F": {"variant": "distance-power", "beta": -1}, "H": {"variant": "unit-pull"}},
      "M": 256, "eps": 0.02, "T": 6, "snapshots": 13})"));
    const Figure3Result r = figure3_run(c);
    CHECK(r.times.size() == 13);
    CHECK(r.diameter.back() > r.diameter.front());
    CHECK(r.sqrt_growth_ok);
    const auto dir = std::filesystem::temp_directory_path() / "growth_fig3_test";
    write_figure3(dir.string(), c, r);
    CHECK(std::filesystem::exists(dir / "diameter.csv"));
    CHECK(std::filesystem::exists(dir / "snapshots.csv"));
    std::filesystem::remove_all(dir);
  }
}
