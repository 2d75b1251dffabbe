/**
 * \file io.hpp
 * \brief Scenario configuration, CSV tables and output comparison for the command-line front end.
 */
#pragma once

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlandau/model.hpp"

namespace qlandau::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioConfig {
  json raw;  ///< the document as read
  SurfaceSpec surface;
  Background background;
  Dimensionality dim = Dimensionality::Surface2D;
  std::optional<PhasePoint> initial;
  std::optional<double> energy;
  std::optional<double> p_phi;
  json settings;  ///< command-specific sections ("trajectory", "hj_orbit", "sweep")
};

namespace detail {

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorKind::ConfigError, where + ": missing \"" + key + "\"");
  if (!j.at(key).is_number()) throw Error(ErrorKind::ConfigError, where + ": \"" + key + "\" must be a number");
  return j.at(key).get<double>();
}

inline std::string text(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw Error(ErrorKind::ConfigError, where + ": missing string \"" + key + "\"");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline SurfaceSpec parse_surface(const json& j) {
  const std::string type = detail::text(j, "type", "surface");
  if (type == "ellipsoid") return Ellipsoid{detail::number(j, "a", "surface"), detail::number(j, "e", "surface")};
  if (type == "hyperboloid") return Hyperboloid{detail::number(j, "a", "surface"), detail::number(j, "e", "surface")};
  if (type == "paraboloid") return Paraboloid{detail::number(j, "p", "surface")};
  throw Error(ErrorKind::ConfigError, "surface: unknown type \"" + type + "\"");
}

/// Charges have no defaults: every field of the chosen background must be present.
inline Background parse_background(const json& j) {
  const std::string type = detail::text(j, "type", "background");
  if (type == "free") return FreeBackground{};
  if (type == "dyons")
    return DyonPair{detail::number(j, "q1", "background"), detail::number(j, "q2", "background"),
                    detail::number(j, "g1", "background"), detail::number(j, "g2", "background")};
  if (type == "parabolic")
    return ParabolicBackground{detail::number(j, "q", "background"), detail::number(j, "g", "background"),
                               detail::number(j, "efield", "background"), detail::number(j, "bfield", "background")};
  throw Error(ErrorKind::ConfigError, "background: unknown type \"" + type + "\"");
}

inline json background_to_json(const Background& b) {
  if (const auto* d = std::get_if<DyonPair>(&b)) return {{"type", "dyons"}, {"q1", d->q1}, {"q2", d->q2}, {"g1", d->g1}, {"g2", d->g2}};
  if (const auto* p = std::get_if<ParabolicBackground>(&b))
    return {{"type", "parabolic"}, {"q", p->q}, {"g", p->g}, {"efield", p->efield}, {"bfield", p->bfield}};
  return {{"type", "free"}};
}

/// Parses a scenario and validates the model combination.
inline ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "configuration must be a JSON object");
  ScenarioConfig c;
  c.raw = j;
  if (!j.contains("surface")) throw Error(ErrorKind::ConfigError, "missing \"surface\"");
  if (!j.contains("background")) throw Error(ErrorKind::ConfigError, "missing \"background\"");
  c.surface = parse_surface(j.at("surface"));
  c.background = parse_background(j.at("background"));
  const std::string dim = j.value("dimensionality", std::string("2d"));
  if (dim == "2d")
    c.dim = Dimensionality::Surface2D;
  else if (dim == "3d")
    c.dim = Dimensionality::Ambient3D;
  else
    throw Error(ErrorKind::ConfigError, "dimensionality must be \"2d\" or \"3d\"");
  (void)make_model(c.surface, c.background, c.dim);

  if (j.contains("initial")) {
    const auto& s = j.at("initial");
    PhasePoint p;
    p.u = detail::number(s, "u", "initial");
    p.p_u = detail::number(s, "p_u", "initial");
    p.phi = s.value("phi", 0.0);
    p.p_phi = detail::number(s, "p_phi", "initial");
    if (c.dim == Dimensionality::Ambient3D) {
      p.v = detail::number(s, "v", "initial");
      p.p_v = detail::number(s, "p_v", "initial");
    }
    c.initial = p;
  }
  if (j.contains("energy")) c.energy = detail::number(j, "energy", "config");
  if (j.contains("p_phi")) c.p_phi = detail::number(j, "p_phi", "config");
  for (const char* key : {"trajectory", "hj_orbit", "sweep", "actions"})
    if (j.contains(key)) c.settings[key] = j.at(key);
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open configuration file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("configuration is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// FNV-1a 64-bit hash of a string.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fingerprint(const json& config, const std::string& command) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(command + "\n" + config.dump()));
  return std::string("fnv1a64:") + buf;
}

// ---------------------------------------------------------------------------
// Tables

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Table {
  std::vector<std::string> metadata;  ///< written as "# " lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (const auto& m : t.metadata) os << "# " << m << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << '\n';
  }
  return os.str();
}

inline json to_json(const Table& t) {
  json j;
  j["metadata"] = t.metadata;
  j["columns"] = t.columns;
  j["rows"] = t.rows;
  return j;
}

inline Table parse_csv(std::istream& in) {
  Table t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.metadata.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) throw Error(ErrorKind::SchemaMismatch, "row width differs from the header");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        row.push_back(std::nan(""));
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw Error(ErrorKind::SchemaMismatch, "no header row");
  return t;
}

inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
  return parse_csv(in);
}

struct CompareReport {
  std::map<std::string, double> max_deviation;
  double tolerance = 0;
  bool passed = false;
};

/// Per-column max |a - b| over `columns` (every column of a when empty, then the column sets must be equal).
inline CompareReport compare_tables(const Table& a, const Table& b, double tol, std::vector<std::string> columns = {}) {
  if (columns.empty()) {
    auto sa = a.columns, sb = b.columns;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) throw Error(ErrorKind::SchemaMismatch, "column sets differ");
    columns = a.columns;
  }
  if (a.rows.size() != b.rows.size()) throw Error(ErrorKind::SchemaMismatch, "row counts differ");
  CompareReport r;
  r.tolerance = tol;
  r.passed = true;
  for (const auto& c : columns) {
    const int ia = a.column(c), ib = b.column(c);
    if (ia < 0 || ib < 0) throw Error(ErrorKind::SchemaMismatch, "column \"" + c + "\" missing");
    double dev = 0;
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      const double x = a.rows[k][ia], y = b.rows[k][ib];
      const double d = (std::isnan(x) && std::isnan(y)) ? 0.0 : std::abs(x - y);
      dev = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(dev, d);
    }
    r.max_deviation[c] = dev;
    if (!(dev <= tol)) r.passed = false;
  }
  return r;
}

inline CompareReport compare_outputs(const std::string& file_a, const std::string& file_b, double tol) {
  return compare_tables(read_csv(file_a), read_csv(file_b), tol);
}

inline json to_json(const CompareReport& r) {
  json j;
  j["tolerance"] = r.tolerance;
  j["passed"] = r.passed;
  j["max_deviation"] = json::object();
  for (const auto& [k, v] : r.max_deviation) j["max_deviation"][k] = v;
  return j;
}

inline json error_json(const Error& e) {
  return {{"error", {{"kind", to_string(e.kind())}, {"message", e.detail()}}}};
}

}  // namespace qlandau::io
