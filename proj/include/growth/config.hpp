#pragma once
// Helpers for strict JSON configuration parsing.

#include <initializer_list>
#include <string>

#include "growth/errors.hpp"
#include "growth/sphere.hpp"
#include "json.hpp"

namespace growth::config {

inline void check_keys(const nlohmann::json& j, std::initializer_list<std::string> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Vec point_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.empty() || v.size() > 3) throw ConfigError("point: expected 1 to 3 coordinates");
  Vec p{0, 0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return p;
}

inline nlohmann::json point_to_json(const Vec& p, int n) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < n; ++i) a.push_back(p[i]);
  return a;
}

}  // namespace growth::config
