#pragma once
// Reference walks on Z^2: vertex once-reinforced (ORRW) and origin-excited (OERW).

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "growth/rng.hpp"
#include "json.hpp"

namespace growth::lattice {

using Site = std::array<std::int64_t, 2>;

enum class Excitation {
  proportional,  // one coordinate, chosen with probability proportional to |c_i|
  largest,       // the coordinate of largest |c_i|; ties go to x
  both,          // every nonzero coordinate
};

Excitation excitation_from_name(const std::string& name);
std::string excitation_name(Excitation e);

struct WalkState {
  Site pos{0, 0};
  std::unordered_map<std::uint64_t, std::uint64_t> first_visit;  // site key -> step index
  std::vector<Site> order;                                       // sites in order of first visit
  std::uint64_t steps = 0;
  std::uint64_t excitations = 0;
  std::int64_t L = 2000;  // box half-width
  bool halted = false;    // left the box
  bool pending = false;   // OERW: the current site was just visited for the first time
};

std::uint64_t site_key(const Site& s);
WalkState initial_walk(std::int64_t L = 2000);
bool visited(const WalkState& s, const Site& site);

// Unit displacement towards the origin for an excitation at site.
Site excitation_displacement(const Site& site, Excitation rule, Stream& rng);

// Nearest-neighbour step, weight a for visited sites and 1 otherwise.
void orrw_step(WalkState& s, double a, Stream& rng);
// Excitation jump if the current site was just discovered, else a simple random walk step.
void oerw_step(WalkState& s, Excitation rule, Stream& rng);

// Range connected under 4-neighbourhoods (or 8 when diagonal moves are possible).
bool range_connected(const WalkState& s, bool diagonal);

struct RangeSpan {
  std::int64_t min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  double aspect() const {
    return static_cast<double>(max_x - min_x + 1) / static_cast<double>(max_y - min_y + 1);
  }
};
RangeSpan range_span(const WalkState& s);

// Rows x,y,sqrt_first_visit_time in first-visit order.
std::string range_csv(const WalkState& s);
void export_range(const WalkState& s, const std::string& path);

struct LatticeConfig {
  std::string walk = "orrw";  // orrw | oerw
  double a = 100.0;
  Excitation rule = Excitation::largest;
  std::uint64_t steps = 1000000;
  std::int64_t L = 2000;
  std::uint64_t seed = 1;
  std::uint64_t check_every = 10000;  // connectivity checks (0 disables)
};

LatticeConfig lattice_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json lattice_config_to_json(const LatticeConfig& c);

struct LatticeRun {
  WalkState state;
  std::uint64_t checks = 0;
  bool connected = true;
};

LatticeRun run_lattice(const LatticeConfig& cfg);
// lattice_range.csv and lattice_meta.json
void write_lattice(const std::string& dir, const LatticeConfig& cfg, const LatticeRun& run,
                   const nlohmann::ordered_json& extra_meta);

}  // namespace growth::lattice
