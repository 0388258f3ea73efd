#include "tfqkd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "tfqkd/config.hpp"
#include "tfqkd/crossterm.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/error.hpp"
#include "tfqkd/keyrate.hpp"

namespace tfqkd::cli {
namespace {

constexpr const char* kModule = "cli";

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

std::string_view constraint_mode_name(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::kOriginal: return "original";
    case ConstraintMode::kImproved: return "improved";
    case ConstraintMode::kInfinite: return "infinite";
  }
  return "unknown";
}

// Shortest round-trip form reads better in messages.
std::string pair_name(double w1, double w2) { return "(" + json(w1).dump() + ", " + json(w2).dump() + ")"; }

json entries_json(const std::map<IntensityPair, double>& m) {
  json out = json::array();
  for (const auto& [k, v] : m) out.push_back({{"omega1", k.first}, {"omega2", k.second}, {"gain", v}});
  return out;
}

double required_number(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw DataIntegrityError(kModule, std::string("gains JSON needs a numeric '") + key + "'");
  }
  return doc[key].get<double>();
}

std::map<IntensityPair, double> entries_from_json(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw DataIntegrityError(kModule, std::string("gains JSON needs an array '") + key + "'");
  }
  std::map<IntensityPair, double> out;
  for (const auto& e : doc[key]) {
    const IntensityPair k{required_number(e, "omega1"), required_number(e, "omega2")};
    if (!out.emplace(k, required_number(e, "gain")).second) {
      throw DataIntegrityError(kModule, std::string("duplicate ") + key + " entry at " + pair_name(k.first, k.second));
    }
  }
  return out;
}

json result_json(const PointReport& r, bool mu_optimized) {
  const auto& p = r.point;
  json classes = json::object();
  for (auto c : kParityClasses) {
    json cls;
    cls["omega"] = r.intervals ? interval_json(at(r.intervals->omega, c)) : json(nullptr);
    cls["phi"] = r.intervals ? interval_json(at(r.intervals->phi, c)) : json(nullptr);
    cls["x"] = r.x ? interval_json(at(r.x->x, c)) : json(nullptr);
    classes[std::string(parity_class_name(c))] = cls;
  }
  return {
      {"mode", rate_mode_name(p.mode)},
      {"distance_km", p.distance_km},
      {"total_loss_db", p.total_loss_db},
      {"mu", p.mu},
      {"mu_optimized", mu_optimized},
      {"skr", p.skr.value()},
      {"q_code", p.q_code.value()},
      {"e_code", p.e_code.value()},
      {"i_ae_upper", p.i_ae_upper.value()},
      {"no_key", p.no_key},
      {"classes", classes},
      {"x_total", r.x ? json(r.x->total) : json(nullptr)},
      {"leakage",
       {{"upper_bound", r.leakage.upper_bound.value()},
        {"certificate_gap", r.leakage.certificate_gap},
        {"converged", r.leakage.converged},
        {"constraint_mode", constraint_mode_name(r.leakage.constraint_mode)},
        {"witness", r.leakage.witness}}},
      {"gains", gains_to_json(r.gains)},
  };
}

void emit_error(std::ostream& err, ErrorCode code, const std::string& module, const std::string& message) {
  json e = {{"error",
             {{"class", error_class_name(code)},
              {"code", static_cast<int>(code)},
              {"module", module},
              {"message", message}}}};
  err << e.dump() << '\n';
}

// Subcommand state filled by CLI11.
struct Args {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;

  std::optional<double> distance_km;
  std::optional<double> mu;
  bool optimize_mu = false;
  std::optional<std::string> gains_path;

  double from = 0.0, to = 0.0, step = 0.0;

  double resolution = 0.25;
  std::string mode = "improved";
};

RunConfig load_config(const Args& a) {
  auto overrides = a.overrides;
  if (a.mu) overrides.push_back("intensities.mu=" + fmt17(*a.mu));
  if (a.optimize_mu) overrides.push_back("optimize_mu=true");
  if (a.gains_path) overrides.push_back("gains_file=" + json(*a.gains_path).dump());
  return config::load(a.config_path, overrides);
}

void require_modeled(const RunConfig& cfg, const char* what) {
  if (cfg.gains_file) throw ConfigError(kModule, std::string(what) + " models its own gains; drop gains_file");
}

int cmd_point(const Args& a, std::ostream& out) {
  const RunConfig cfg = load_config(a);
  json results = json::array();
  double distance = 0.0;

  if (cfg.gains_file) {
    if (cfg.optimize_mu) throw ConfigError(kModule, "optimize_mu needs modeled gains; drop gains_file");
    const auto input = read_gains_file(*cfg.gains_file);
    if (a.distance_km) {
      distance = *a.distance_km;
    } else if (input.distance_km) {
      distance = *input.distance_km;
    } else {
      throw ConfigError(kModule, "point needs --distance-km");
    }
    if (a.mu && *a.mu != input.table.mu) throw ConfigError(kModule, "--mu differs from the gain table's mu");
    const auto intensities = cfg.intensities.with_mu(input.table.mu);
    for (auto m : cfg.modes) {
      if (m == RateMode::kInfiniteImproved || m == RateMode::kInfiniteOriginal) {
        throw ConfigError(kModule, "mode " + std::string(rate_mode_name(m)) + " needs modeled gains");
      }
      results.push_back(
          result_json(keyrate::evaluate_gains(cfg.channel, input.table, intensities, distance, m, cfg.pipeline), false));
    }
  } else {
    if (!a.distance_km) throw ConfigError(kModule, "point needs --distance-km");
    distance = *a.distance_km;
    for (auto m : cfg.modes) {
      double mu = cfg.intensities.mu();
      if (cfg.optimize_mu) mu = keyrate::optimize_mu(cfg.channel, cfg.intensities, distance, m, cfg.mu_grid, cfg.pipeline).mu_star;
      results.push_back(result_json(
          keyrate::evaluate_point_detailed(cfg.channel, cfg.intensities.with_mu(mu), distance, m, cfg.pipeline),
          cfg.optimize_mu));
    }
  }

  json report = {
      {"distance_km", distance},
      {"loss_db", cfg.channel.loss_coeff * distance},
      {"plob_bound", finite_or_null(keyrate::plob_bound(cfg.channel, distance, cfg.plob_with_detector))},
      {"config", config::to_json(cfg)},
      {"results", results},
  };
  out << report.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Args& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(a);
  require_modeled(cfg, "sweep");
  if (!(a.step > 0.0) || !(a.to >= a.from) || !std::isfinite(a.to)) {
    throw ConfigError(kModule, "sweep needs --step > 0 and --to >= --from");
  }
  // Tolerate rounding so that an endpoint on the grid is included.
  const auto count = static_cast<std::size_t>(std::floor((a.to - a.from) / a.step + 1e-9)) + 1;
  std::vector<double> distances(count);
  for (std::size_t i = 0; i < count; ++i) distances[i] = a.from + static_cast<double>(i) * a.step;

  const auto rows = keyrate::sweep(cfg.channel, cfg.intensities, distances, cfg.modes, cfg.optimize_mu, cfg.mu_grid,
                                   cfg.pipeline);
  out << "distance_km,loss_db,mode,mu,q_code,e_code,i_ae_upper,skr,plob_bound\n";
  std::optional<ErrorCode> first_error;
  for (const auto& r : rows) {
    const auto& p = r.point;
    out << fmt17(p.distance_km) << ',' << fmt17(p.total_loss_db) << ',' << rate_mode_name(p.mode) << ','
        << fmt17(p.mu) << ',';
    if (r.error) {
      out << ",,,,\n";
      emit_error(err, *r.error, "keyrate",
                 "distance " + fmt17(p.distance_km) + " mode " + std::string(rate_mode_name(p.mode)) + ": " +
                     r.error_message);
      if (!first_error) first_error = r.error;
      continue;
    }
    out << fmt17(p.q_code.value()) << ',' << fmt17(p.e_code.value()) << ',' << fmt17(p.i_ae_upper.value()) << ','
        << fmt17(p.skr.value()) << ',' << fmt17(keyrate::plob_bound(cfg.channel, p.distance_km, cfg.plob_with_detector)) << '\n';
  }
  return first_error ? static_cast<int>(*first_error) : 0;
}

int cmd_loss_limit(const Args& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(a);
  require_modeled(cfg, "loss-limit");
  const auto mode = parse_rate_mode(a.mode);
  if (!mode) throw ConfigError(kModule, "unknown mode '" + a.mode + "'");
  const auto limit =
      keyrate::max_tolerable_loss(cfg.channel, cfg.intensities, *mode, a.resolution, cfg.mu_grid, cfg.pipeline);
  if (limit.no_key_at_zero) err << "no key at zero loss\n";
  out << fmt17(limit.loss_db) << '\n';
  return 0;
}

int cmd_ingest_check(const Args& a, std::ostream& out) {
  const RunConfig cfg = load_config(a);
  const auto input = read_gains_file(*cfg.gains_file);
  const auto& g = input.table;
  const auto intensities = cfg.intensities.with_mu(g.mu);
  const auto sopt = lp::SolverOptions{cfg.pipeline.lp_tol, cfg.pipeline.lp_tol};

  const auto yields = decoy::bound_yields(g, intensities, cfg.pipeline.yield_cutoff, sopt);

  // An honest channel gives identical gains in both decoy modes; anything
  // beyond the truncation slack signals tampering or a broken table.
  json diagnostics = json::array();
  std::optional<std::string> violation;
  for (double w1 : intensities.i2()) {
    for (double w2 : intensities.i2()) {
      const double diff = g.d2_gain(w1, w2) - g.d1_gain(w1, w2);
      const double slack = crossterm::pair_tail_slack(w1, w2, cfg.pipeline.pair_cutoff, yields);
      const bool ok = std::abs(diff) <= slack;
      diagnostics.push_back({{"omega1", w1}, {"omega2", w2}, {"difference", diff}, {"slack", slack}, {"ok", ok}});
      if (!ok && !violation) {
        violation = "phase-locked and phase-randomized gains differ by " + fmt17(diff) + " at pair " +
                    pair_name(w1, w2) + ", beyond the slack " + fmt17(slack);
      }
    }
  }

  std::string crossterm_status = "feasible";
  std::optional<DataIntegrityError> crossterm_error;
  try {
    crossterm::phi_bounds(g, yields, intensities, g.mu, cfg.pipeline.pair_cutoff, sopt);
  } catch (const DataIntegrityError& e) {
    crossterm_status = "infeasible";
    crossterm_error = e;
  }

  json report = {
      {"mu", g.mu},
      {"code_gain", g.code_gain},
      {"code_error", g.code_error},
      {"d1_entries", g.d1.size()},
      {"d2_entries", g.d2.size()},
      {"decoy_program", "feasible"},
      {"crossterm_program", crossterm_status},
      {"honest_consistency", diagnostics},
      {"status", violation || crossterm_error ? "rejected" : "ok"},
  };
  out << report.dump(2) << '\n';
  if (violation) throw DataIntegrityError(kModule, *violation);
  if (crossterm_error) throw *crossterm_error;
  return 0;
}

}  // namespace

json gains_to_json(const GainTable& table) {
  return {
      {"mu", table.mu},
      {"code_gain", table.code_gain},
      {"code_error", table.code_error},
      {"provenance", table.provenance == Provenance::kModeled ? "modeled" : "measured"},
      {"d1", entries_json(table.d1)},
      {"d2", entries_json(table.d2)},
  };
}

GainTable gains_from_json(const json& doc) {
  if (!doc.is_object()) throw DataIntegrityError(kModule, "gains JSON must be an object");
  GainTable t;
  t.mu = required_number(doc, "mu");
  t.code_gain = required_number(doc, "code_gain");
  t.code_error = required_number(doc, "code_error");
  t.d1 = entries_from_json(doc, "d1");
  t.d2 = entries_from_json(doc, "d2");
  t.provenance = Provenance::kMeasured;
  t.validate();
  return t;
}

GainsInput read_gains_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(kModule, "cannot open gains file " + path);
  in >> std::ws;
  if (in.peek() != '{') return {channel::read_gain_table_csv(in), std::nullopt};

  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw DataIntegrityError(kModule, "gains file " + path + " is not valid JSON");
  if (doc.contains("results")) {
    const auto& results = doc["results"];
    if (!results.is_array() || results.empty() || !results[0].contains("gains")) {
      throw DataIntegrityError(kModule, "point report " + path + " has no embedded gains");
    }
    std::optional<double> distance;
    if (doc.contains("distance_km") && doc["distance_km"].is_number()) distance = doc["distance_km"].get<double>();
    return {gains_from_json(results[0]["gains"]), distance};
  }
  if (doc.contains("gains")) return {gains_from_json(doc["gains"]), std::nullopt};
  return {gains_from_json(doc), std::nullopt};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Certified secret-key rates for twin-field QKD without phase postselection", "tfqkd"};
  app.require_subcommand(1);
  app.add_option("--config", a.config_path, "JSON config file");
  app.add_option("--set", a.overrides, "Override a config key, e.g. channel.misalignment=0.02")->take_all();

  auto* point = app.add_subcommand("point", "Key rate report at one distance (JSON)");
  point->add_option("--distance-km", a.distance_km, "Total Alice-Bob distance");
  point->add_option("--mu", a.mu, "Code intensity");
  point->add_flag("--optimize-mu", a.optimize_mu, "Optimize the code intensity per mode");
  point->add_option("--gains", a.gains_path, "Measured gains: CSV, gains JSON or a point report");

  auto* sweep = app.add_subcommand("sweep", "Key rate against distance (CSV)");
  sweep->add_option("--from", a.from, "First distance in km")->required();
  sweep->add_option("--to", a.to, "Last distance in km")->required();
  sweep->add_option("--step", a.step, "Distance step in km")->required();
  sweep->add_flag("--optimize-mu", a.optimize_mu, "Optimize the code intensity per point");

  auto* loss = app.add_subcommand("loss-limit", "Largest total loss in dB with positive optimized key");
  loss->add_option("--resolution", a.resolution, "Bisection resolution in dB")->capture_default_str();
  loss->add_option("--mode", a.mode, "Rate mode")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest-check", "Validate a measured gain table without computing rates");
  ingest->add_option("--gains", a.gains_path, "Gain table: CSV, gains JSON or a point report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    emit_error(err, ErrorCode::kConfig, kModule, e.what());
    return static_cast<int>(ErrorCode::kConfig);
  }

  try {
    if (*point) return cmd_point(a, out);
    if (*sweep) return cmd_sweep(a, out, err);
    if (*loss) return cmd_loss_limit(a, out, err);
    return cmd_ingest_check(a, out);
  } catch (const Error& e) {
    emit_error(err, e.code(), e.module(), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << json{{"error", {{"class", "internal"}, {"code", 1}, {"module", kModule}, {"message", e.what()}}}}.dump()
        << '\n';
    return 1;
  }
}

}  // namespace tfqkd::cli
