#include "tfqkd/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tfqkd/error.hpp"

namespace tfqkd::config {
namespace {

constexpr const char* kModule = "config";

using nlohmann::json;

const json& at_path(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError(kModule, "missing key '" + path + "'");
    node = &(*node)[part];
  }
  return *node;
}

double number(const json& doc, const std::string& path) {
  const auto& v = at_path(doc, path);
  if (!v.is_number()) throw ConfigError(kModule, "'" + path + "' must be a number");
  return v.get<double>();
}

int integer(const json& doc, const std::string& path) {
  const auto& v = at_path(doc, path);
  if (!v.is_number_integer()) throw ConfigError(kModule, "'" + path + "' must be an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& doc, const std::string& path) {
  const auto& v = at_path(doc, path);
  if (!v.is_array()) throw ConfigError(kModule, "'" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(kModule, "'" + path + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void merge_into(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError(kModule, "'" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(kModule, "unknown key '" + path + "'");
    if (base[key].is_object()) {
      merge_into(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

std::vector<double> without(const std::vector<double>& v, double x) {
  std::vector<double> out;
  for (double w : v) {
    if (w != x) out.push_back(w);
  }
  return out;
}

}  // namespace

json default_document() {
  return json{
      {"channel",
       {{"dark_count", 8e-8}, {"det_eff", 0.145}, {"loss_coeff", 0.2}, {"misalignment", 0.015}, {"ec_eff", 1.15}}},
      {"intensities", {{"mu", 0.1}, {"i1_decoys", {1.3, 0.005, 0.002, 0.0}}, {"i2_decoys", {0.005, 0.002, 0.0}}}},
      {"cutoffs", {{"yield_cutoff", 10}, {"pair_cutoff", 6}}},
      {"tolerances", {{"lp_tol", 1e-9}, {"leakage_tol", leakage::kDefaultTolerance}}},
      {"modes", {"improved", "original"}},
      {"original_decoys", "i2"},
      {"gains_file", nullptr},
      {"optimize_mu", false},
      {"mu_grid", {{"lo", 0.01}, {"hi", 1.0}, {"steps", 50}}},
      {"plob_with_detector", false},
  };
}

json merge(const json& user) {
  json doc = default_document();
  merge_into(doc, user, "");
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(kModule, "override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) throw ConfigError(kModule, "unknown key '" + path + "'");
    node = &(*node)[parts[i]];
  }
  if (node->is_object()) throw ConfigError(kModule, "'" + path + "' is a section; set one of its keys");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = std::move(value);
}

RunConfig parse(const json& doc) {
  const json full = merge(doc);
  RunConfig cfg;

  cfg.channel.dark_count = number(full, "channel.dark_count");
  cfg.channel.det_eff = number(full, "channel.det_eff");
  cfg.channel.loss_coeff = number(full, "channel.loss_coeff");
  cfg.channel.misalignment = number(full, "channel.misalignment");
  cfg.channel.ec_eff = number(full, "channel.ec_eff");
  cfg.channel.validate();

  cfg.intensities = IntensityConfig::with_decoys(number(full, "intensities.mu"), numbers(full, "intensities.i1_decoys"),
                                                 numbers(full, "intensities.i2_decoys"));

  cfg.pipeline.yield_cutoff = integer(full, "cutoffs.yield_cutoff");
  cfg.pipeline.pair_cutoff = integer(full, "cutoffs.pair_cutoff");
  if (cfg.pipeline.yield_cutoff < 3) throw ConfigError(kModule, "'cutoffs.yield_cutoff' must be >= 3");
  if (cfg.pipeline.pair_cutoff < 1) throw ConfigError(kModule, "'cutoffs.pair_cutoff' must be >= 1");
  cfg.pipeline.lp_tol = number(full, "tolerances.lp_tol");
  cfg.pipeline.leakage_tol = number(full, "tolerances.leakage_tol");
  if (!(cfg.pipeline.lp_tol > 0.0)) throw ConfigError(kModule, "'tolerances.lp_tol' must be > 0");
  if (!(cfg.pipeline.leakage_tol > 0.0)) throw ConfigError(kModule, "'tolerances.leakage_tol' must be > 0");

  const auto& od = at_path(full, "original_decoys");
  if (od == "i1") {
    cfg.pipeline.original_decoys = OriginalDecoys::kI1;
  } else if (od == "i2") {
    cfg.pipeline.original_decoys = OriginalDecoys::kI2;
  } else {
    throw ConfigError(kModule, "'original_decoys' must be \"i1\" or \"i2\"");
  }

  const auto& modes = at_path(full, "modes");
  if (!modes.is_array() || modes.empty()) throw ConfigError(kModule, "'modes' must be a non-empty array");
  cfg.modes.clear();
  for (const auto& m : modes) {
    const auto mode = m.is_string() ? parse_rate_mode(m.get<std::string>()) : std::nullopt;
    if (!mode) throw ConfigError(kModule, "'modes' has an unknown mode: " + m.dump());
    if (std::find(cfg.modes.begin(), cfg.modes.end(), *mode) != cfg.modes.end()) {
      throw ConfigError(kModule, "'modes' lists " + m.dump() + " twice");
    }
    cfg.modes.push_back(*mode);
  }

  const auto& gf = at_path(full, "gains_file");
  if (gf.is_string()) {
    cfg.gains_file = gf.get<std::string>();
  } else if (!gf.is_null()) {
    throw ConfigError(kModule, "'gains_file' must be a path or null");
  }

  const auto& opt = at_path(full, "optimize_mu");
  if (!opt.is_boolean()) throw ConfigError(kModule, "'optimize_mu' must be true or false");
  cfg.optimize_mu = opt.get<bool>();

  const auto& pd = at_path(full, "plob_with_detector");
  if (!pd.is_boolean()) throw ConfigError(kModule, "'plob_with_detector' must be true or false");
  cfg.plob_with_detector = pd.get<bool>();

  cfg.mu_grid.lo = number(full, "mu_grid.lo");
  cfg.mu_grid.hi = number(full, "mu_grid.hi");
  cfg.mu_grid.steps = integer(full, "mu_grid.steps");
  if (!(cfg.mu_grid.lo > 0.0 && cfg.mu_grid.hi >= cfg.mu_grid.lo)) {
    throw ConfigError(kModule, "'mu_grid' needs 0 < lo <= hi");
  }
  if (cfg.mu_grid.steps < 2) throw ConfigError(kModule, "'mu_grid.steps' must be >= 2");
  // Every scanned mu must stay distinct from the weak decoys.
  const auto weak = without(cfg.intensities.i2(), cfg.intensities.mu());
  if (!weak.empty() && !(cfg.mu_grid.lo > weak.back())) {
    throw ConfigError(kModule, "'mu_grid.lo' must exceed the largest phase-locked decoy");
  }
  return cfg;
}

RunConfig load(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  json doc = default_document();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError(kModule, "cannot open config file " + *path);
    json user = json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigError(kModule, "config file " + *path + " is not valid JSON");
    doc = merge(user);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse(doc);
}

json to_json(const RunConfig& cfg) {
  json doc = default_document();
  doc["channel"] = {{"dark_count", cfg.channel.dark_count},
                    {"det_eff", cfg.channel.det_eff},
                    {"loss_coeff", cfg.channel.loss_coeff},
                    {"misalignment", cfg.channel.misalignment},
                    {"ec_eff", cfg.channel.ec_eff}};
  const double mu = cfg.intensities.mu();
  doc["intensities"] = {{"mu", mu},
                        {"i1_decoys", without(cfg.intensities.i1(), mu)},
                        {"i2_decoys", without(cfg.intensities.i2(), mu)}};
  doc["cutoffs"] = {{"yield_cutoff", cfg.pipeline.yield_cutoff}, {"pair_cutoff", cfg.pipeline.pair_cutoff}};
  doc["tolerances"] = {{"lp_tol", cfg.pipeline.lp_tol}, {"leakage_tol", cfg.pipeline.leakage_tol}};
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(std::string(rate_mode_name(m)));
  doc["modes"] = modes;
  doc["original_decoys"] = cfg.pipeline.original_decoys == OriginalDecoys::kI1 ? "i1" : "i2";
  doc["gains_file"] = cfg.gains_file ? json(*cfg.gains_file) : json(nullptr);
  doc["optimize_mu"] = cfg.optimize_mu;
  doc["mu_grid"] = {{"lo", cfg.mu_grid.lo}, {"hi", cfg.mu_grid.hi}, {"steps", cfg.mu_grid.steps}};
  doc["plob_with_detector"] = cfg.plob_with_detector;
  return doc;
}

}  // namespace tfqkd::config
