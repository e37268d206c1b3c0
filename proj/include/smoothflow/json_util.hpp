#pragma once

// Strict JSON helpers: every reader rejects keys it does not know.

#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "smoothflow/errors.hpp"

namespace smoothflow::jsonu {

using nlohmann::json;

void require_object(const json& j, const std::string& where);
void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where);

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  return get_or<T>(j, key, T{}, where);
}

json read_file(const std::string& path);
void write_file(const std::string& path, const json& j);

/// JSON has no infinities; large magnitudes stand in for them.
double finite_or_clamped(double v);

}  // namespace smoothflow::jsonu
