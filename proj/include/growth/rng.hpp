#pragma once
// Named deterministic random streams.
//
// A Stream is a 64-bit Mersenne Twister seeded from (root seed, name path).
// Derived streams mix the parent seed with a label through splitmix64, so
// sub-streams for seeds, chains and exit batches never overlap by construction
// and do not depend on the order in which they are created.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace growth {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::string name = "root")
      : seed_(seed), name_(std::move(name)), engine_(splitmix64(seed)) {}

  Stream derive(std::string_view label) const {
    return Stream(splitmix64(seed_ ^ hash_label(label)), name_ + "/" + std::string(label));
  }
  Stream derive(std::string_view label, std::uint64_t index) const {
    return Stream(splitmix64(splitmix64(seed_ ^ hash_label(label)) + index),
                  name_ + "/" + std::string(label) + "#" + std::to_string(index));
  }

  // Uniform on [0, 1) with 53 random bits; portable across standard libraries.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Exponential(1) by inversion.
  double exponential() { return -std::log1p(-uniform()); }

  std::uint64_t bits() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  const std::string& name() const { return name_; }

 private:
  std::uint64_t seed_;
  std::string name_;
  std::mt19937_64 engine_;
};

}  // namespace growth
