#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfqkd/channel.hpp"
#include "tfqkd/intensity.hpp"
#include "tfqkd/keyrate.hpp"

namespace tfqkd {

// Everything one CLI invocation needs, validated before any computation.
struct RunConfig {
  ChannelParams channel{.misalignment = 0.015};
  IntensityConfig intensities = IntensityConfig::with_decoys(0.1, {1.3, 0.005, 0.002, 0.0}, {0.005, 0.002, 0.0});
  PipelineOptions pipeline;
  std::vector<RateMode> modes{RateMode::kImproved, RateMode::kOriginal};
  std::optional<std::string> gains_file;
  bool optimize_mu = false;
  MuGrid mu_grid;
  bool plob_with_detector = false;  // count detector efficiency as channel loss
};

namespace config {

// Defaults as a JSON document. The misalignment default is this artifact's
// choice; the other channel values are the reference setup.
nlohmann::json default_document();

// Apply "dotted.key=value"; the value is read as JSON, else as a string.
// Unknown keys throw ConfigError.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Merge a user document over the defaults, rejecting unknown keys.
nlohmann::json merge(const nlohmann::json& user);

// Validate a full document into a RunConfig. Throws ConfigError naming the
// offending key, or the module error for an invariant violation.
RunConfig parse(const nlohmann::json& doc);

// Read an optional config file, apply overrides, and parse.
RunConfig load(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace config
}  // namespace tfqkd
