#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "tfqkd/channel.hpp"

namespace tfqkd::cli {

// Gain tables as JSON: mu, code gain and error, and d1 / d2 entry lists.
nlohmann::json gains_to_json(const GainTable& table);
GainTable gains_from_json(const nlohmann::json& doc);

struct GainsInput {
  GainTable table;
  std::optional<double> distance_km;  // known when read from a point report
};

// Reads a gain table CSV, a gains JSON object, or a point report (the first
// result's embedded gains). The table is marked measured.
GainsInput read_gains_file(const std::string& path);

// Entry point: parses argv, dispatches the subcommand, and returns the exit
// status. Results go to out; errors go to err as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tfqkd::cli
