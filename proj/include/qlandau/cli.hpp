/**
 * \file cli.hpp
 * \brief Commands of the quadric-landau front end.
 *
 * Exit codes: 0 success, 1 module or configuration error (error JSON on the
 * error stream), 2 usage error, 3 comparison outside tolerance.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlandau/action.hpp"
#include "qlandau/dynamics.hpp"
#include "qlandau/hjq.hpp"
#include "qlandau/io.hpp"

namespace qlandau::cli {

using nlohmann::json;

constexpr int kOk = 0, kModuleError = 1, kUsage = 2, kCompareFailed = 3;

/// Samples per radial oscillation when a trajectory section does not set "samples".
constexpr int kSamplesPerOscillation = 512;

struct Options {
  std::string command;
  std::string config_path;
  std::string out_path;
  std::string format;
  std::string compare_path;
  double tol = 1e-6;
  std::vector<std::string> files;  ///< positional arguments of `compare`
};

namespace detail {

inline SurfaceModel model_of(const io::ScenarioConfig& c) { return make_model(c.surface, c.background, c.dim); }

/// Initial state: explicit, or (energy, p_phi) started at the potential minimum with p_u >= 0.
inline PhasePoint initial_state(const SurfaceModel& m, const io::ScenarioConfig& c) {
  if (c.initial) return *c.initial;
  if (!c.energy || !c.p_phi) throw Error(ErrorKind::ConfigError, "need \"initial\" or both \"energy\" and \"p_phi\"");
  if (m.is_ambient()) throw Error(ErrorKind::ConfigError, "ambient models need an explicit \"initial\" state");
  const auto pm = potential_minimum(m, *c.p_phi);
  const double r = radial_momentum_squared(m, pm.u, *c.energy, *c.p_phi);
  if (r < 0) throw Error(ErrorKind::NoBoundMotion, "energy lies below the potential minimum");
  return {pm.u, std::sqrt(r), 0, *c.p_phi};
}

inline std::pair<double, double> energy_and_pphi(const SurfaceModel& m, const io::ScenarioConfig& c) {
  if (c.energy && c.p_phi) return {*c.energy, *c.p_phi};
  if (c.initial) return {energy(m, *c.initial), c.initial->p_phi};
  throw Error(ErrorKind::ConfigError, "need \"energy\" and \"p_phi\" or an \"initial\" state");
}

struct TimeGrid {
  double t_end = 0;
  int samples = 0;  ///< 0: every accepted step
  double tol = 1e-10;
  double period = 0;  ///< radial period when the band is bounded
};

/// Shared by `trajectory` and `hj-orbit` so that both sample identical times.
inline TimeGrid time_grid(const SurfaceModel& m, const io::ScenarioConfig& c, const PhasePoint& s0) {
  const json sec = c.settings.is_object() && c.settings.contains("trajectory") ? c.settings.at("trajectory") : json::object();
  TimeGrid g;
  g.tol = sec.value("tol", 1e-10);
  if (!m.is_ambient()) {
    try {
      g.period = hjq::radial_cycle(m, energy(m, s0), s0.p_phi, s0.u).period;
    } catch (const Error&) {
      g.period = 0;
    }
  }
  if (sec.contains("t_end")) {
    g.t_end = sec.at("t_end").get<double>();
  } else if (sec.contains("periods")) {
    if (g.period == 0) throw Error(ErrorKind::UnboundMotion, "\"periods\" needs a bounded radial band");
    g.t_end = sec.at("periods").get<double>() * g.period;
  } else {
    throw Error(ErrorKind::ConfigError, "trajectory section needs \"t_end\" or \"periods\"");
  }
  if (sec.contains("samples"))
    g.samples = sec.at("samples").get<int>();
  else if (g.period > 0)
    g.samples = static_cast<int>(std::ceil(g.t_end / g.period * kSamplesPerOscillation)) + 1;
  return g;
}

inline std::vector<std::string> metadata(const io::ScenarioConfig& c, const std::string& command,
                                         const SurfaceModel& m) {
  return {"quadric-landau " + command, "model: " + m.id(), "config: " + c.raw.dump(),
          "fingerprint: " + io::fingerprint(c.raw, command)};
}

inline io::Table trajectory_table(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  const auto s0 = initial_state(m, c);
  const auto g = time_grid(m, c, s0);
  const auto tr = integrate(m, s0, g.t_end, g.tol, g.samples);
  io::Table t;
  t.metadata = metadata(c, "trajectory", m);
  t.metadata.push_back("tol: " + io::format_double(g.tol) + ", accepted steps: " + std::to_string(tr.accepted_steps));
  t.columns = {"t", "u", "p_u", "phi", "H"};
  if (m.is_ambient()) t.columns = {"t", "u", "p_u", "phi", "v", "p_v", "H"};
  for (const auto& s : tr.samples) {
    if (m.is_ambient())
      t.rows.push_back({s.t, s.state.u, s.state.p_u, s.state.phi, s.state.v, s.state.p_v, s.H});
    else
      t.rows.push_back({s.t, s.state.u, s.state.p_u, s.state.phi, s.H});
  }
  return t;
}

inline io::Table hj_orbit_table(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  require_surface(m, "hj-orbit");
  const auto s0 = initial_state(m, c);
  const auto g = time_grid(m, c, s0);
  if (g.samples < 1) throw Error(ErrorKind::ConfigError, "hj-orbit needs a sampled time grid");
  const hjq::QuadratureOrbit orbit(m, s0);
  io::Table t;
  t.metadata = metadata(c, "hj-orbit", m);
  t.metadata.push_back("radial period: " + io::format_double(orbit.period()) +
                       ", phi advance per period: " + io::format_double(orbit.phi_advance()));
  t.columns = {"u", "t", "phi"};
  for (int k = 0; k < g.samples; ++k) {
    const double tk = g.samples > 1 ? g.t_end * static_cast<double>(k) / (g.samples - 1) : 0.0;
    const auto [u, phi] = orbit.at(tk);
    t.rows.push_back({u, tk, phi});
  }
  return t;
}

inline json actions_json(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  const auto [E, pf] = energy_and_pphi(m, c);
  json j;
  j["model"] = m.id();
  j["E"] = E;
  j["p_phi"] = pf;
  const auto q = action::action_I1_quadrature(m, E, pf);
  j["quadrature"] = action::to_json(q);
  j["appell"] = action::to_json(action::action_I1_appell(m, E, pf));
  j["radial_period_quadrature"] = hjq::radial_cycle(m, E, pf).period;
  j["fingerprint"] = io::fingerprint(c.raw, "actions");
  return j;
}

inline io::Table actions_table(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  const auto [E, pf] = energy_and_pphi(m, c);
  const auto q = action::action_I1_quadrature(m, E, pf);
  const auto a = action::action_I1_appell(m, E, pf);
  io::Table t;
  t.metadata = metadata(c, "actions", m);
  t.metadata.push_back("method: 0 = quadrature, 1 = appell");
  t.columns = {"method", "I1", "I2", "radial_frequency"};
  t.rows.push_back({0, q.I1, q.I2, q.radial_frequency});
  t.rows.push_back({1, a.result.I1, a.result.I2, a.result.radial_frequency});
  return t;
}

inline json audit_json(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  const auto [E, pf] = energy_and_pphi(m, c);
  json j = hjq::to_json(hjq::audit_formula(m, E, pf));
  j["fingerprint"] = io::fingerprint(c.raw, "audit");
  return j;
}

inline json reduce_check_json(const io::ScenarioConfig& c) {
  const auto m = model_of(c);
  const auto r = classify_reducible(m);
  return {{"model", m.id()},
          {"reducible", r.reducible},
          {"matched_condition", r.matched_condition},
          {"q", r.q},
          {"g", r.g},
          {"fingerprint", io::fingerprint(c.raw, "reduce-check")}};
}

/// Status codes in the sweep table: 0 ok, otherwise 1 + ErrorKind.
inline io::Table sweep_table(const io::ScenarioConfig& c) {
  if (!c.settings.is_object() || !c.settings.contains("sweep")) throw Error(ErrorKind::ConfigError, "missing \"sweep\" section");
  const json& sec = c.settings.at("sweep");
  const auto base = model_of(c);
  require_surface(base, "sweep");

  std::vector<double> energies, pphis;
  std::vector<Background> backgrounds;
  if (sec.contains("energies")) energies = sec.at("energies").get<std::vector<double>>();
  else if (c.energy) energies = {*c.energy};
  if (sec.contains("p_phis")) pphis = sec.at("p_phis").get<std::vector<double>>();
  else if (c.p_phi) pphis = {*c.p_phi};
  if (sec.contains("charges")) {
    for (const auto& b : sec.at("charges")) {
      json bj = b;
      if (!bj.contains("type")) bj["type"] = std::holds_alternative<ParabolicBackground>(c.background) ? "parabolic" : "dyons";
      backgrounds.push_back(io::parse_background(bj));
    }
  } else {
    backgrounds = {c.background};
  }
  if (energies.empty() || pphis.empty()) throw Error(ErrorKind::ConfigError, "sweep needs energies and p_phis");
  const int threads = std::max(1, sec.value("threads", 1));

  struct Point {
    std::size_t bi;
    double E, pf;
  };
  std::vector<Point> points;
  for (std::size_t bi = 0; bi < backgrounds.size(); ++bi)
    for (double E : energies)
      for (double pf : pphis) points.push_back({bi, E, pf});

  const bool parab = std::holds_alternative<Paraboloid>(c.surface);
  const double nan = std::nan("");
  std::vector<std::vector<double>> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= points.size()) return;
      const auto& pt = points[k];
      std::vector<double> row{pt.E, pt.pf};
      const Background& b = backgrounds[pt.bi];
      if (parab) {
        const auto pb = std::holds_alternative<ParabolicBackground>(b) ? std::get<ParabolicBackground>(b) : ParabolicBackground{};
        row.insert(row.end(), {pb.q, pb.g, pb.efield, pb.bfield});
      } else {
        const auto d = std::holds_alternative<DyonPair>(b) ? std::get<DyonPair>(b) : DyonPair{};
        row.insert(row.end(), {d.q1, d.q2, d.g1, d.g2});
      }
      double lower = nan, upper = nan, period = nan, advance = nan, I1 = nan, status = 0;
      try {
        const auto m = make_model(c.surface, b, c.dim);
        const auto band = allowed_band(m, pt.E, pt.pf);
        lower = band.lower;
        upper = band.upper;
        if (band.bounded()) {
          const auto cyc = hjq::radial_cycle(m, pt.E, pt.pf);
          period = cyc.period;
          advance = cyc.phi_advance;
          if (m.is_ellipsoid()) I1 = action::action_I1_quadrature(m, pt.E, pt.pf, false).I1;
        }
      } catch (const Error& e) {
        status = 1 + static_cast<double>(e.kind());
      }
      row.insert(row.end(), {lower, upper, period, advance, I1, status});
      rows[k] = std::move(row);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  io::Table t;
  t.metadata = metadata(c, "sweep", base);
  t.metadata.push_back("status: 0 ok, otherwise 1 + error kind index");
  t.columns = {"E", "p_phi"};
  if (parab)
    t.columns.insert(t.columns.end(), {"q", "g", "efield", "bfield"});
  else
    t.columns.insert(t.columns.end(), {"q1", "q2", "g1", "g2"});
  t.columns.insert(t.columns.end(), {"band_lower", "band_upper", "period", "phi_advance", "I1", "status"});
  t.rows = std::move(rows);
  return t;
}

inline void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + o.out_path);
  f << text;
}

/// Columns of `produced` compared against the file named by --compare.
inline int compare_against(const io::Table& produced, const Options& o, std::ostream& err) {
  const auto other = io::read_csv(o.compare_path);
  const auto rep = io::compare_tables(produced, other, o.tol, produced.columns);
  err << io::to_json(rep).dump() << '\n';
  return rep.passed ? kOk : kCompareFailed;
}

}  // namespace detail

inline int execute(const Options& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.command == "compare") {
      if (o.files.size() != 2) {
        err << "compare needs two files\n";
        return kUsage;
      }
      const auto rep = io::compare_outputs(o.files[0], o.files[1], o.tol);
      detail::emit(io::to_json(rep).dump(2) + "\n", o, out);
      return rep.passed ? kOk : kCompareFailed;
    }
    const auto cfg = io::load_config(o.config_path);
    const bool table_command = o.command == "trajectory" || o.command == "hj-orbit" || o.command == "sweep";
    const std::string format = o.format.empty() ? (table_command ? "csv" : "json") : o.format;
    if (format != "csv" && format != "json") {
      err << "--format must be csv or json\n";
      return kUsage;
    }
    io::Table table;
    json doc;
    bool is_table = true;
    if (o.command == "trajectory")
      table = detail::trajectory_table(cfg);
    else if (o.command == "hj-orbit")
      table = detail::hj_orbit_table(cfg);
    else if (o.command == "sweep")
      table = detail::sweep_table(cfg);
    else if (o.command == "actions") {
      if (format == "csv")
        table = detail::actions_table(cfg);
      else
        doc = detail::actions_json(cfg), is_table = false;
    } else if (o.command == "audit" || o.command == "reduce-check") {
      if (format == "csv") {
        err << o.command << " produces JSON only\n";
        return kUsage;
      }
      doc = o.command == "audit" ? detail::audit_json(cfg) : detail::reduce_check_json(cfg);
      is_table = false;
    } else {
      err << "unknown command " << o.command << '\n';
      return kUsage;
    }
    if (is_table)
      detail::emit(format == "csv" ? io::to_csv(table) : io::to_json(table).dump(2) + "\n", o, out);
    else
      detail::emit(doc.dump(2) + "\n", o, out);
    if (!o.compare_path.empty()) {
      if (!is_table) {
        err << "--compare applies to table outputs\n";
        return kUsage;
      }
      return detail::compare_against(table, o, err);
    }
    return kOk;
  } catch (const Error& e) {
    err << io::error_json(e).dump() << '\n';
    return kModuleError;
  } catch (const nlohmann::json::exception& e) {
    err << io::error_json(Error(ErrorKind::ConfigError, e.what())).dump() << '\n';
    return kModuleError;
  }
}

/// Parses argv and runs the selected command.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Landau problems on quadrics of revolution"};
  app.name("quadric-landau");
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "scenario JSON")->required();
    sub->add_option("--out", o.out_path, "output file (stdout when omitted)");
    sub->add_option("--format", o.format, "csv or json");
    sub->add_option("--compare", o.compare_path, "CSV to compare the output against");
    sub->add_option("--tol", o.tol, "comparison tolerance");
  };
  for (const char* name : {"trajectory", "hj-orbit", "actions", "audit", "reduce-check", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
    sub->callback([&o, name]() { o.command = name; });
  }
  auto* cmp = app.add_subcommand("compare", "per-column max deviation between two CSV files");
  cmp->add_option("files", o.files, "two CSV files")->expected(2)->required();
  cmp->add_option("--tol", o.tol, "tolerance");
  cmp->add_option("--out", o.out_path, "output file");
  cmp->callback([&o]() { o.command = "compare"; });
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }
  return execute(o, out, err);
}

}  // namespace qlandau::cli
