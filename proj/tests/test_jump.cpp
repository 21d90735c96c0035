#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "growth/errors.hpp"
#include "growth/io.hpp"
#include "growth/jump_process.hpp"
#include "growth/shapes.hpp"
#include "growth/stats.hpp"

using namespace growth;
using std::numbers::pi;
using nlohmann::json;

namespace {

RuleSet parse(const char* text) { return rules_from_json(json::parse(text)); }

const char* kUniform = R"({"F":{"variant":"uniform"}})";
const char* kPowerGamma = R"({"F":{"variant":"distance-power","beta":-1},"H":{"variant":"gamma-linear","gamma":0.5}})";

}  // namespace

TEST_SUITE("jump") {
  TEST_CASE("single step grows the domain and keeps determinism") {
    const GridPtr g = make_grid(2, 1024);
    const RuleEngine eng(parse(kPowerGamma), g);
    ProcessOptions po;
    po.eps = 1e-2;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    GrowthState a = proc.initial_state(sunflower_shape(g, 3, 0.2), Vec{0, 0, 0});
    GrowthState b = a;
    Stream r1(42), r2(42);
    for (int i = 0; i < 50; ++i) {
      const RadialField before = a.r;
      const JumpRecord ja = proc.step(a, r1);
      const JumpRecord jb = proc.step(b, r2);
      for (std::size_t j = 0; j < g->size(); ++j) {
        CHECK(a.r[j] >= before[j]);
        CHECK(a.r[j] == b.r[j]);
      }
      CHECK(ja.dleb > 0);
      CHECK(ja.t == jb.t);
      CHECK(a.x == b.x);
    }
    CHECK(a.jumps == 50);
  }

  TEST_CASE("single jump volume on the unit ball") {
    const GridPtr g = make_grid(2, 16384);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 1e-4;
    JumpProcess proc(eng, po);
    GrowthState s = proc.initial_state(RadialField(g, 1.0), Vec{0, 0, 0});
    Stream rng(1);
    const JumpRecord j = proc.step(s, rng);
    CHECK(std::abs(j.dleb / 1e-4 - 1.0) <= 3 * std::sqrt(1e-4));
    CHECK(j.y == doctest::Approx(2 * pi));
    CHECK(j.eta == doctest::Approx(1e-2 / (2 * pi)).epsilon(2e-3));
  }

  TEST_CASE("strict resolution policy refuses unresolved bumps") {
    const GridPtr g = make_grid(2, 256);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 1e-4;
    JumpProcess proc(eng, po);
    GrowthState s = proc.initial_state(RadialField(g, 1.0), Vec{0, 0, 0});
    Stream rng(1);
    CHECK_THROWS_AS(proc.step(s, rng), ResolutionError);
    po.policy = ResolutionPolicy::floor;
    JumpProcess floored(eng, po);
    floored.step(s, rng);
    CHECK(s.floored == 1);
  }

  TEST_CASE("kernel memo quantises eta") {
    const GridPtr g = make_grid(2, 1024);
    const RuleEngine eng(parse(kUniform), g);
    JumpProcess proc(eng, ProcessOptions{});
    const BumpKernel& a = proc.kernel(0.1);
    const BumpKernel& b = proc.kernel(0.10002);
    CHECK(&a == &b);
    CHECK(std::abs(a.eta() / 0.1 - 1) < 1e-3);
    proc.kernel(0.2);
    CHECK(proc.cached_kernels() == 2);
  }

  TEST_CASE("volume bookkeeping and clock") {
    const GridPtr g = make_grid(2, 1024);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 1e-3;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    std::vector<double> counts, dlebs;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      Stream rng(seed);
      SimulateOptions so;
      so.T = 1.0;
      so.plan.count = 5;
      const Trajectory tr = simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng);
      counts.push_back(static_cast<double>(tr.final_state.jumps));
      const double leb_gain = leb_volume(tr.final_state.r) - leb_volume(RadialField(g, 1.0));
      CHECK(tr.dleb_total == doctest::Approx(leb_gain).epsilon(1e-10));
      dlebs.push_back(leb_gain);
      CHECK(tr.jumps.size() == tr.final_state.jumps);
      CHECK(tr.snapshots.size() == 5);
      for (std::size_t k = 1; k < tr.snapshot_times.size(); ++k) CHECK(tr.snapshot_times[k] > tr.snapshot_times[k - 1]);
    }
    CHECK(std::abs(stats::mean(counts) - 1000.0) <= 3 * std::sqrt(1000.0));
    // Leb gain = T +- 5 sqrt(T eps) per run
    for (double d : dlebs) CHECK(std::abs(d - 1.0) <= 5 * std::sqrt(1e-3));
  }

  TEST_CASE("fixed clock takes eps steps") {
    const GridPtr g = make_grid(2, 512);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 1e-2;
    po.clock = ClockMode::fixed;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    Stream rng(3);
    SimulateOptions so;
    so.T = 0.5 + 1e-9;
    const Trajectory tr = simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng);
    CHECK(tr.final_state.jumps == 50);
  }

  TEST_CASE("snapshots hold values between jumps") {
    const GridPtr g = make_grid(2, 512);
    const RuleEngine eng(parse(kPowerGamma), g);
    ProcessOptions po;
    po.eps = 0.05;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    Stream rng(8);
    SimulateOptions so;
    so.T = 1.0;
    so.plan.spacing = SnapshotSpacing::uniform;
    so.plan.count = 201;
    const RadialField r0 = sunflower_shape(g, 3, 0.2);
    const Trajectory tr = simulate(proc, r0, Vec{0, 0, 0}, so, rng);
    CHECK(tr.snapshots.front()[0] == r0[0]);
    // a snapshot taken before the first jump equals r0
    const double first = tr.jumps.front().t;
    for (std::size_t k = 0; k < tr.snapshot_times.size() && tr.snapshot_times[k] < first; ++k)
      CHECK(l2_distance(tr.snapshots[k], r0) == 0.0);
    CHECK(&held_snapshot(tr, 0.5) == &tr.snapshots[100]);
    // geometric plan
    SnapshotPlan geo;
    geo.count = 4;
    const auto t = geo.times(8.0);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == doctest::Approx(8e-3));
    CHECK(t[3] == 8.0);
  }

  TEST_CASE("scaling coupling") {
    const GridPtr g = make_grid(2, 1024);
    for (const char* text : {kPowerGamma, R"({"F":{"variant":"boundary-proportional"},"H":{"variant":"l1-scaled"}})"}) {
      CAPTURE(text);
      const RuleEngine eng(parse(text), g);
      for (double eps : {1e-2, 1e-3}) {
        const RadialField r0 = sunflower_shape(g, 3, 0.2);
        const double c = std::sqrt(eps);
        ProcessOptions pe;
        pe.eps = eps;
        pe.policy = ResolutionPolicy::floor;
        ProcessOptions p1 = pe;
        p1.eps = 1.0;
        JumpProcess small(eng, pe), one(eng, p1);
        SimulateOptions se;
        se.T = 0.3;
        se.plan.count = 10;
        SimulateOptions s1 = se;
        s1.T = se.T / eps;
        Stream ra(77), rb(77);
        const Trajectory te = simulate(small, r0, Vec{0, 0, 0}, se, ra);
        s1.replay_xi = xi_sequence(te);
        const Trajectory t1 = simulate(one, r0.scaled(1.0 / c), Vec{0, 0, 0}, s1, rb);
        const Trajectory back = rescale_trajectory(t1, c);
        REQUIRE(te.final_state.jumps == t1.final_state.jumps);
        double dev = 0;
        for (std::size_t j = 0; j < g->size(); ++j)
          dev = std::max(dev, std::abs(back.final_state.r[j] - te.final_state.r[j]));
        CHECK(dev < 1e-10);
        for (std::size_t k = 0; k < te.snapshots.size(); ++k)
          CHECK(l2_distance(back.snapshots[k], te.snapshots[k]) < 1e-10);
      }
    }
  }

  TEST_CASE("replayed angles keep the monte carlo coupling tight") {
    const GridPtr g = make_grid(2, 1024);
    const RuleEngine eng(parse(R"({"F":{"variant":"harmonic-mc","n_exits":400},"H":{"variant":"gamma-linear","gamma":0.5}})"), g);
    const double eps = 1e-2, c = 0.1;
    ProcessOptions pe;
    pe.eps = eps;
    pe.policy = ResolutionPolicy::floor;
    ProcessOptions p1 = pe;
    p1.eps = 1.0;
    JumpProcess small(eng, pe), one(eng, p1);
    SimulateOptions se;
    se.T = 0.2;
    se.plan.count = 5;
    SimulateOptions s1 = se;
    s1.T = se.T / eps;
    const RadialField r0 = sunflower_shape(g, 3, 0.2);
    Stream ra(3), rb(3);
    const Trajectory te = simulate(small, r0, Vec{0, 0, 0}, se, ra);
    s1.replay_xi = xi_sequence(te);
    const Trajectory back = rescale_trajectory(simulate(one, r0.scaled(1 / c), Vec{0, 0, 0}, s1, rb), c);
    REQUIRE(back.jumps.size() == te.jumps.size());
    for (std::size_t i = 0; i < te.jumps.size(); ++i) CHECK(back.jumps[i].xi == te.jumps[i].xi);
    double dev = 0;
    for (std::size_t j = 0; j < g->size(); ++j) dev = std::max(dev, std::abs(back.final_state.r[j] - te.final_state.r[j]));
    CHECK(dev < 1e-10);
  }

  TEST_CASE("rescale identity") {
    const GridPtr g = make_grid(2, 256);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 0.05;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    Stream rng(2);
    SimulateOptions so;
    so.T = 0.5;
    const Trajectory tr = simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng);
    const Trajectory same = rescale_trajectory(tr, 1.0);
    CHECK(same.final_state.r.values()[3] == tr.final_state.r.values()[3]);
    CHECK(same.snapshot_times == tr.snapshot_times);
    const Trajectory twice = rescale_trajectory(tr, 2.0);
    CHECK(leb_volume(twice.final_state.r) == doctest::Approx(4 * leb_volume(tr.final_state.r)));
    CHECK(twice.dleb_total == doctest::Approx(4 * tr.dleb_total));
  }

  TEST_CASE("monitors") {
    const GridPtr g = make_grid(2, 256);
    const RuleEngine eng(parse(kUniform), g);
    GrowthState s;
    s.r = RadialField(g, 1.0);
    Monitors m;
    m.delta_radius = 1e-6;
    m.delta_density = 1e-6;
    CHECK(!check_monitors(s, eng, m).any());
    s.r = RadialField(g, 2.0);
    Monitors r;
    r.delta_radius = 1.0;
    const Monitors hit = check_monitors(s, eng, r);
    CHECK(hit.radius_triggered);
    CHECK(hit.radius_time == 0.0);
    Monitors d;
    d.delta_density = 1.0;
    CHECK(check_monitors(s, eng, d).density_triggered);
    // trigger times are kept
    s.t = 5.0;
    CHECK(check_monitors(s, eng, hit).radius_time == 0.0);
  }

  TEST_CASE("strict monitors abort the run") {
    const GridPtr g = make_grid(2, 256);
    const RuleEngine eng(parse(kUniform), g);
    ProcessOptions po;
    po.eps = 0.05;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    SimulateOptions so;
    so.monitors.delta_density = 1.0;
    Stream rng(1);
    const Trajectory tr = simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng);
    CHECK(tr.monitors.density_triggered);
    so.strict = true;
    Stream rng2(1);
    CHECK_THROWS_AS(simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng2), MonitorTriggered);
  }

  TEST_CASE("harmonic-mc process runs and refreshes y") {
    const GridPtr g = make_grid(2, 512);
    const RuleEngine eng(parse(R"({"F":{"variant":"harmonic-mc","n_exits":50,"refresh_every":5},"H":{"variant":"gamma-linear","gamma":0.5}})"), g);
    ProcessOptions po;
    po.eps = 0.02;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    GrowthState s = proc.initial_state(RadialField(g, 1.0), Vec{0, 0, 0});
    Stream rng(6);
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) ys.push_back(proc.step(s, rng).y);
    CHECK(ys[0] == ys[4]);
    CHECK(s.under_sampled == 2);
  }

  TEST_CASE("trajectory files") {
    const GridPtr g = make_grid(2, 64);
    const RuleEngine eng(parse(kPowerGamma), g);
    ProcessOptions po;
    po.eps = 0.05;
    po.policy = ResolutionPolicy::floor;
    JumpProcess proc(eng, po);
    SimulateOptions so;
    so.T = 0.3;
    so.plan.count = 3;
    auto run = [&](const std::string& dir) {
      Stream rng(5);
      const Trajectory tr = simulate(proc, RadialField(g, 1.0), Vec{0, 0, 0}, so, rng);
      write_trajectory(dir, tr, nlohmann::ordered_json{{"seed", 5}});
      return tr;
    };
    const auto base = std::filesystem::temp_directory_path() / "growth_traj_test";
    std::filesystem::remove_all(base);
    const Trajectory tr = run((base / "a").string());
    run((base / "b").string());
    for (const char* f : {"meta.json", "snapshots.csv", "particle.csv", "jumps.csv", "monitors.json"}) {
      CHECK(std::filesystem::exists(base / "a" / f));
      CHECK(io::read_file((base / "a" / f).string()) == io::read_file((base / "b" / f).string()));
    }
    const std::string snaps = io::read_file((base / "a" / "snapshots.csv").string());
    CHECK(std::count(snaps.begin(), snaps.end(), '\n') == 1 + 3 * 64);
    const std::string jumps = io::read_file((base / "a" / "jumps.csv").string());
    CHECK(static_cast<std::size_t>(std::count(jumps.begin(), jumps.end(), '\n')) == 1 + tr.jumps.size());
    std::filesystem::remove_all(base);
  }
}
