#include "growth/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <unordered_set>

#include "growth/config.hpp"
#include "growth/errors.hpp"
#include "growth/io.hpp"

namespace growth::lattice {

namespace {

constexpr std::array<Site, 4> kNeighbours{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

std::int64_t toward_origin(std::int64_t c) { return c > 0 ? -1 : (c < 0 ? 1 : 0); }

void arrive(WalkState& s, const Site& next) {
  s.pos = next;
  ++s.steps;
  if (std::abs(next[0]) > s.L || std::abs(next[1]) > s.L) s.halted = true;
  const auto [it, inserted] = s.first_visit.emplace(site_key(next), s.steps);
  if (inserted) s.order.push_back(next);
  s.pending = inserted;
}

}  // namespace

Excitation excitation_from_name(const std::string& name) {
  if (name == "proportional") return Excitation::proportional;
  if (name == "largest") return Excitation::largest;
  if (name == "both") return Excitation::both;
  throw ConfigError("unknown excitation rule '" + name + "'");
}

std::string excitation_name(Excitation e) {
  switch (e) {
    case Excitation::proportional:
      return "proportional";
    case Excitation::largest:
      return "largest";
    case Excitation::both:
      return "both";
  }
  return "?";
}

std::uint64_t site_key(const Site& s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[0])) << 32) |
         static_cast<std::uint32_t>(s[1]);
}

WalkState initial_walk(std::int64_t L) {
  if (L < 1) throw InvalidArgument("box half-width must be >= 1");
  WalkState s;
  s.L = L;
  s.first_visit.emplace(site_key(s.pos), 0);
  s.order.push_back(s.pos);
  return s;
}

bool visited(const WalkState& s, const Site& site) { return s.first_visit.count(site_key(site)) > 0; }

Site excitation_displacement(const Site& site, Excitation rule, Stream& rng) {
  const std::int64_t ax = std::abs(site[0]), ay = std::abs(site[1]);
  switch (rule) {
    case Excitation::both:
      return {toward_origin(site[0]), toward_origin(site[1])};
    case Excitation::largest:
      return ax >= ay ? Site{toward_origin(site[0]), 0} : Site{0, toward_origin(site[1])};
    case Excitation::proportional: {
      if (ax + ay == 0) return {0, 0};
      const double u = rng.uniform() * static_cast<double>(ax + ay);
      return u < static_cast<double>(ax) ? Site{toward_origin(site[0]), 0} : Site{0, toward_origin(site[1])};
    }
  }
  return {0, 0};
}

void orrw_step(WalkState& s, double a, Stream& rng) {
  if (!(a > 0)) throw InvalidArgument("reinforcement a must be positive");
  if (s.halted) return;
  std::array<double, 4> w{};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Site nb{s.pos[0] + kNeighbours[k][0], s.pos[1] + kNeighbours[k][1]};
    w[k] = visited(s, nb) ? a : 1.0;
    total += w[k];
  }
  double u = rng.uniform() * total;
  int k = 0;
  while (k < 3 && u >= w[k]) u -= w[k++];
  arrive(s, {s.pos[0] + kNeighbours[k][0], s.pos[1] + kNeighbours[k][1]});
}

void oerw_step(WalkState& s, Excitation rule, Stream& rng) {
  if (s.halted) return;
  if (s.pending) {
    const Site d = excitation_displacement(s.pos, rule, rng);
    if (d[0] != 0 || d[1] != 0) {
      ++s.excitations;
      arrive(s, {s.pos[0] + d[0], s.pos[1] + d[1]});
      return;
    }
  }
  const int k = static_cast<int>(rng.uniform() * 4.0);
  arrive(s, {s.pos[0] + kNeighbours[k][0], s.pos[1] + kNeighbours[k][1]});
}

bool range_connected(const WalkState& s, bool diagonal) {
  std::unordered_set<std::uint64_t> seen{site_key({0, 0})};
  std::deque<Site> queue{{0, 0}};
  while (!queue.empty()) {
    const Site c = queue.front();
    queue.pop_front();
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if ((dx == 0 && dy == 0) || (!diagonal && dx != 0 && dy != 0)) continue;
        const Site nb{c[0] + dx, c[1] + dy};
        const std::uint64_t key = site_key(nb);
        if (s.first_visit.count(key) && seen.insert(key).second) queue.push_back(nb);
      }
    }
  }
  return seen.size() == s.first_visit.size();
}

RangeSpan range_span(const WalkState& s) {
  RangeSpan r;
  for (const Site& p : s.order) {
    r.min_x = std::min(r.min_x, p[0]);
    r.max_x = std::max(r.max_x, p[0]);
    r.min_y = std::min(r.min_y, p[1]);
    r.max_y = std::max(r.max_y, p[1]);
  }
  return r;
}

std::string range_csv(const WalkState& s) {
  std::string out = "x,y,sqrt_first_visit_time\n";
  for (const Site& p : s.order) {
    const double t = std::sqrt(static_cast<double>(s.first_visit.at(site_key(p))));
    out += std::to_string(p[0]) + "," + std::to_string(p[1]) + "," + io::format_double(t) + "\n";
  }
  return out;
}

void export_range(const WalkState& s, const std::string& path) { io::write_atomic(path, range_csv(s)); }

LatticeConfig lattice_config_from_json(const nlohmann::json& j) {
  config::check_keys(j, {"command", "walk", "a", "rule", "steps", "L", "seed", "check_every"}, "lattice");
  LatticeConfig c;
  c.walk = config::get_or(j, "walk", c.walk, "lattice");
  c.a = config::get_or(j, "a", c.a, "lattice");
  if (j.contains("rule")) c.rule = excitation_from_name(j.at("rule").get<std::string>());
  c.steps = config::get_or(j, "steps", c.steps, "lattice");
  c.L = config::get_or(j, "L", c.L, "lattice");
  c.seed = config::get_or(j, "seed", c.seed, "lattice");
  c.check_every = config::get_or(j, "check_every", c.check_every, "lattice");
  if (c.walk != "orrw" && c.walk != "oerw") throw ConfigError("lattice: walk must be orrw or oerw");
  if (!(c.a > 0)) throw ConfigError("lattice: a must be positive");
  if (c.L < 1) throw ConfigError("lattice: L must be >= 1");
  return c;
}

nlohmann::ordered_json lattice_config_to_json(const LatticeConfig& c) {
  return {{"command", "lattice"}, {"walk", c.walk}, {"a", c.a},       {"rule", excitation_name(c.rule)},
          {"steps", c.steps},     {"L", c.L},       {"seed", c.seed}, {"check_every", c.check_every}};
}

LatticeRun run_lattice(const LatticeConfig& cfg) {
  LatticeRun run;
  run.state = initial_walk(cfg.L);
  Stream rng(cfg.seed, "lattice");
  const bool diagonal = cfg.walk == "oerw" && cfg.rule == Excitation::both;
  for (std::uint64_t i = 0; i < cfg.steps && !run.state.halted; ++i) {
    if (cfg.walk == "orrw") {
      orrw_step(run.state, cfg.a, rng);
    } else {
      oerw_step(run.state, cfg.rule, rng);
    }
    if (cfg.check_every > 0 && (i + 1) % cfg.check_every == 0) {
      ++run.checks;
      run.connected = run.connected && range_connected(run.state, diagonal);
    }
  }
  ++run.checks;
  run.connected = run.connected && range_connected(run.state, diagonal);
  return run;
}

void write_lattice(const std::string& dir, const LatticeConfig& cfg, const LatticeRun& run,
                   const nlohmann::ordered_json& extra_meta) {
  io::ensure_directory(dir);
  const std::filesystem::path root(dir);
  export_range(run.state, (root / "lattice_range.csv").string());
  const RangeSpan span = range_span(run.state);
  nlohmann::ordered_json meta = extra_meta;
  meta["config"] = lattice_config_to_json(cfg);
  meta["steps_taken"] = run.state.steps;
  meta["range_size"] = run.state.order.size();
  meta["excitations"] = run.state.excitations;
  meta["halted"] = run.state.halted;
  meta["connected"] = run.connected;
  meta["connectivity_checks"] = run.checks;
  meta["span"] = {{"min_x", span.min_x}, {"max_x", span.max_x}, {"min_y", span.min_y}, {"max_y", span.max_y}};
  meta["aspect_ratio"] = span.aspect();
  io::write_atomic((root / "lattice_meta.json").string(), meta.dump(2) + "\n");
}

}  // namespace growth::lattice
