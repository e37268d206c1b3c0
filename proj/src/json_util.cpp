#include "smoothflow/json_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace smoothflow::jsonu {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

double finite_or_clamped(double v) {
  if (std::isnan(v)) throw NumericError("NaN cannot be serialized");
  if (std::isinf(v)) return v > 0 ? 1e300 : -1e300;
  return v;
}

}  // namespace smoothflow::jsonu
