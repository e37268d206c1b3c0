#include "smoothflow/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "smoothflow/errors.hpp"
#include "smoothflow/json_util.hpp"

namespace smoothflow {

using nlohmann::json;

Compactification Compactification::for_potential(const ToyPotential& p) {
  Compactification c;
  c.domains = p.domains();
  p.native_range(c.native_lo, c.native_hi);
  for (Domain d : c.domains) {
    c.unit_lo.push_back(d == Domain::Circle ? 0.0 : kUnitMargin);
    c.unit_hi.push_back(d == Domain::Circle ? 1.0 : 1.0 - kUnitMargin);
  }
  return c;
}

double Compactification::scale(int d) const {
  const auto i = static_cast<std::size_t>(d);
  return (unit_hi[i] - unit_lo[i]) / (native_hi[i] - native_lo[i]);
}

double Compactification::to_unit(int d, double native) const {
  const auto i = static_cast<std::size_t>(d);
  double u = unit_lo[i] + scale(d) * (native - native_lo[i]);
  if (domains[i] == Domain::Circle) u -= std::floor(u);
  return u;
}

double Compactification::to_native(int d, double unit) const {
  const auto i = static_cast<std::size_t>(d);
  return native_lo[i] + (unit - unit_lo[i]) / scale(d);
}

double Compactification::log_scale_sum() const {
  double s = 0;
  for (int d = 0; d < dims(); ++d) s += std::log(scale(d));
  return s;
}

json Compactification::to_json() const {
  json tags = json::array();
  for (Domain d : domains) tags.push_back(to_string(d));
  return {{"domain_tags", tags}, {"native_lo", native_lo}, {"native_hi", native_hi}, {"unit_lo", unit_lo}, {"unit_hi", unit_hi}};
}

Compactification Compactification::from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"domain_tags", "native_lo", "native_hi", "unit_lo", "unit_hi"}, where);
  Compactification c;
  for (const auto& t : jsonu::get_required<std::vector<std::string>>(j, "domain_tags", where)) c.domains.push_back(domain_from_string(t));
  c.native_lo = jsonu::get_required<std::vector<double>>(j, "native_lo", where);
  c.native_hi = jsonu::get_required<std::vector<double>>(j, "native_hi", where);
  c.unit_lo = jsonu::get_required<std::vector<double>>(j, "unit_lo", where);
  c.unit_hi = jsonu::get_required<std::vector<double>>(j, "unit_hi", where);
  const std::size_t n = c.domains.size();
  if (n == 0 || c.native_lo.size() != n || c.native_hi.size() != n || c.unit_lo.size() != n || c.unit_hi.size() != n)
    throw ConfigError(where + ": all entries need one value per dimension");
  for (std::size_t i = 0; i < n; ++i)
    if (!(c.native_hi[i] > c.native_lo[i]) || !(c.unit_hi[i] > c.unit_lo[i]) || c.unit_lo[i] < 0 || c.unit_hi[i] > 1)
      throw ConfigError(where + ": invalid range in dimension " + std::to_string(i));
  return c;
}

void MHConfig::validate() const {
  if (chains < 1 || burn < 0 || steps < 1) throw ConfigError("dataset: chains and steps must be >= 1, burn >= 0");
  if (!(proposal_std > 0)) throw ConfigError("dataset.proposal_std must be > 0");
}

MHResult mh_sample(const ToyPotential& p, const MHConfig& cfg, std::uint64_t seed) {
  p.validate();
  cfg.validate();
  const int d = p.dims;
  const int n = cfg.chains;
  std::vector<double> lo, hi;
  p.native_range(lo, hi);
  const bool periodic = p.kind == PotentialKind::Periodic;

  // Regular grid of cell centres, filled in row-major order.
  int g = 1;
  while (std::pow(static_cast<double>(g), d) < n) ++g;
  Eigen::ArrayXXd x(n, d);
  for (int c = 0; c < n; ++c) {
    int k = c;
    for (int j = d - 1; j >= 0; --j) {
      const auto jj = static_cast<std::size_t>(j);
      x(c, j) = lo[jj] + (k % g + 0.5) * (hi[jj] - lo[jj]) / g;
      k /= g;
    }
  }
  Eigen::ArrayXd u(n);
  for (int c = 0; c < n; ++c) {
    const Eigen::ArrayXd row = x.row(c).transpose();
    u(c) = p.energy(row.data());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, cfg.proposal_std);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MHResult out;
  out.x.resize(static_cast<Eigen::Index>(n) * cfg.steps, d);
  std::vector<double> prop(static_cast<std::size_t>(d));
  long accepted = 0, proposed = 0;
  for (int step = 0; step < cfg.burn + cfg.steps; ++step) {
    for (int c = 0; c < n; ++c) {
      for (int j = 0; j < d; ++j) {
        double v = x(c, j) + normal(rng);
        if (periodic) {
          const auto jj = static_cast<std::size_t>(j);
          const double period = hi[jj] - lo[jj];
          v = lo[jj] + (v - lo[jj]) - period * std::floor((v - lo[jj]) / period);
        }
        prop[static_cast<std::size_t>(j)] = v;
      }
      const double r = unif(rng);
      ++proposed;
      if (!p.inside(prop.data())) continue;
      const double un = p.energy(prop.data());
      if (un <= u(c) || r < std::exp(u(c) - un)) {
        for (int j = 0; j < d; ++j) x(c, j) = prop[static_cast<std::size_t>(j)];
        u(c) = un;
        ++accepted;
      }
    }
    if (step >= cfg.burn) out.x.middleRows(static_cast<Eigen::Index>(step - cfg.burn) * n, n) = x;
  }
  Eigen::ArrayXd uu;
  p.eval(out.x, uu, out.f);
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

Dataset make_dataset(const ToyPotential& p, const MHConfig& cfg, std::uint64_t seed) {
  const MHResult mh = mh_sample(p, cfg, seed);
  Dataset ds;
  ds.comp = Compactification::for_potential(p);
  const int d = p.dims;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < mh.x.rows(); ++i) {
    bool ok = true;
    for (int j = 0; j < d; ++j) {
      const double v = ds.comp.to_unit(j, mh.x(i, j));
      ok = ok && v >= 0.0 && v <= 1.0;
    }
    if (ok) keep.push_back(i);
  }
  ds.x.resize(static_cast<Eigen::Index>(keep.size()), d);
  ds.f.resize(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto i = keep[r];
    const auto rr = static_cast<Eigen::Index>(r);
    for (int j = 0; j < d; ++j) {
      ds.x(rr, j) = ds.comp.to_unit(j, mh.x(i, j));
      ds.f(rr, j) = ds.comp.force_to_unit(j, mh.f(i, j));
    }
  }
  if (keep.empty()) throw NumericError("dataset: no samples fell inside the unit cube");
  ds.meta = {{"format", "smoothflow-dataset"},
             {"version", 1},
             {"coordinates", "unit"},
             {"potential", p.to_json()},
             {"compactification", ds.comp.to_json()},
             {"mh",
              {{"chains", cfg.chains},
               {"burn", cfg.burn},
               {"steps", cfg.steps},
               {"proposal_std", cfg.proposal_std},
               {"init", "grid"},
               {"acceptance", mh.acceptance}}},
             {"seed", seed},
             {"samples", keep.size()},
             {"dropped", static_cast<std::size_t>(mh.x.rows()) - keep.size()}};
  return ds;
}

std::string meta_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_dataset(const Dataset& ds, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write '" + path + "'");
  const int d = ds.dims();
  for (int j = 0; j < d; ++j) std::fprintf(fp, "%sx%d", j ? "," : "", j + 1);
  for (int j = 0; j < d; ++j) std::fprintf(fp, ",f%d", j + 1);
  std::fputc('\n', fp);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (int j = 0; j < d; ++j) std::fprintf(fp, "%s%.17g", j ? "," : "", ds.x(i, j));
    for (int j = 0; j < d; ++j) std::fprintf(fp, ",%.17g", ds.f(i, j));
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) throw IoError("error writing '" + path + "'");
  jsonu::write_file(meta_path(path), ds.meta);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  Dataset ds;
  ds.meta = jsonu::read_file(meta_path(path));
  const std::string mw = meta_path(path);
  jsonu::require_object(ds.meta, mw);
  if (!ds.meta.contains("compactification")) throw ConfigError(mw + ": missing 'compactification'");
  ds.comp = Compactification::from_json(ds.meta.at("compactification"), mw + ".compactification");
  const int d = ds.comp.dims();

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  std::string expect;
  for (int j = 0; j < d; ++j) expect += (j ? ",x" : "x") + std::to_string(j + 1);
  for (int j = 0; j < d; ++j) expect += ",f" + std::to_string(j + 1);
  if (line != expect) throw IoError(path + ": header must be '" + expect + "'");
  std::vector<double> vals;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t start = 0;
    int count = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string tok = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (tok.empty() || *end != '\0') throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      vals.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (count != 2 * d) throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(2 * d) + " fields");
  }
  const auto n = static_cast<Eigen::Index>(vals.size() / static_cast<std::size_t>(2 * d));
  if (n == 0) throw IoError(path + ": no samples");
  ds.x.resize(n, d);
  ds.f.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      ds.x(i, j) = vals[static_cast<std::size_t>(i * 2 * d + j)];
      ds.f(i, j) = vals[static_cast<std::size_t>(i * 2 * d + d + j)];
    }
  if (!ds.x.allFinite() || (ds.x < 0.0).any() || (ds.x > 1.0).any()) throw IoError(path + ": positions must be finite and inside the unit cube");
  return ds;
}

}  // namespace smoothflow
