#include "tfqkd/channel.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "tfqkd/error.hpp"

namespace tfqkd {
namespace {

constexpr const char* kModule = "channel";

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(kModule, what);
}

void require_distance(double distance_km) {
  require(std::isfinite(distance_km) && distance_km >= 0.0, "distance_km must be finite and >= 0");
}

void require_intensity(double w, const char* name) {
  require(std::isfinite(w) && w >= 0.0, std::string(name) + " must be finite and >= 0");
}

// 1 - (1 - p_dc)^k e^{-x}, evaluated without cancellation for tiny results.
double click_probability(double dark_count, int detectors, double arriving) {
  const double v = -std::expm1(detectors * std::log1p(-dark_count) - arriving);
  return std::clamp(v, 0.0, 1.0);
}

std::vector<double> key_intensities(const std::map<IntensityPair, double>& m) {
  std::set<double> s;
  for (const auto& [k, v] : m) {
    s.insert(k.first);
    s.insert(k.second);
  }
  return {s.begin(), s.end()};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& field, std::size_t line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw DataIntegrityError(kModule, "gain table line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

void ChannelParams::validate() const {
  require(std::isfinite(dark_count) && dark_count >= 0.0 && dark_count < 0.5, "dark_count must lie in [0, 0.5)");
  require(std::isfinite(det_eff) && det_eff > 0.0 && det_eff <= 1.0, "det_eff must lie in (0, 1]");
  require(std::isfinite(loss_coeff) && loss_coeff >= 0.0, "loss_coeff must be >= 0");
  require(std::isfinite(misalignment) && misalignment >= 0.0 && misalignment <= 0.5, "misalignment must lie in [0, 0.5]");
  require(std::isfinite(ec_eff) && ec_eff >= 1.0, "ec_eff must be >= 1");
}

double GainTable::d1_gain(double w1, double w2) const {
  const auto it = d1.find({w1, w2});
  if (it == d1.end()) {
    throw DataIntegrityError(kModule, "missing d1 gain for (" + fmt17(w1) + ", " + fmt17(w2) + ")");
  }
  return it->second;
}

double GainTable::d2_gain(double w1, double w2) const {
  const auto it = d2.find({w1, w2});
  if (it == d2.end()) {
    throw DataIntegrityError(kModule, "missing d2 gain for (" + fmt17(w1) + ", " + fmt17(w2) + ")");
  }
  return it->second;
}

std::vector<double> GainTable::d1_intensities() const { return key_intensities(d1); }
std::vector<double> GainTable::d2_intensities() const { return key_intensities(d2); }

void GainTable::validate() const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!(std::isfinite(mu) && mu > 0.0)) throw DataIntegrityError(kModule, "code intensity must be > 0");
  if (!in_unit(code_gain)) throw DataIntegrityError(kModule, "code gain outside [0, 1]");
  if (!in_unit(code_error)) throw DataIntegrityError(kModule, "code error outside [0, 1]");
  for (const auto* m : {&d1, &d2}) {
    for (const auto& [k, v] : *m) {
      if (!in_unit(v)) {
        throw DataIntegrityError(kModule, "gain outside [0, 1] at (" + fmt17(k.first) + ", " + fmt17(k.second) + ")");
      }
    }
  }
  const auto i1 = d1_intensities();
  for (double a : i1) {
    for (double b : i1) {
      if (!d1.count({a, b})) {
        throw DataIntegrityError(kModule, "d1 gains do not cover a square grid; missing (" + fmt17(a) + ", " + fmt17(b) + ")");
      }
    }
  }
  const auto i2 = d2_intensities();
  for (double a : i2) {
    if (!std::binary_search(i1.begin(), i1.end(), a)) {
      throw DataIntegrityError(kModule, "d2 intensity " + fmt17(a) + " has no d1 counterpart");
    }
    for (double b : i2) {
      if (!d2.count({a, b})) {
        throw DataIntegrityError(kModule, "d2 gains do not cover a square grid; missing (" + fmt17(a) + ", " + fmt17(b) + ")");
      }
    }
  }
}

namespace channel {

double arm_transmittance(const ChannelParams& params, double distance_km) {
  require_distance(distance_km);
  return params.det_eff * std::pow(10.0, -params.loss_coeff * (distance_km / 2.0) / 10.0);
}

CodeObservation code_gain_and_error(const ChannelParams& params, double mu, double distance_km) {
  require_intensity(mu, "mu");
  const double eta = arm_transmittance(params, distance_km);
  const double e = params.misalignment;
  const double p_sig = click_probability(params.dark_count, 1, 2.0 * mu * eta * (1.0 - e));
  const double p_wrong = click_probability(params.dark_count, 1, 2.0 * mu * eta * e);
  const double gain = click_probability(params.dark_count, 2, eta * (mu + mu));
  if (gain == 0.0) return {Probability(0.0), Probability(0.0)};
  const double errors = p_wrong * (1.0 - p_sig) + 0.5 * p_sig * p_wrong;
  return {Probability(gain), Probability(std::clamp(errors / gain, 0.0, 1.0))};
}

Probability decoy1_gain(const ChannelParams& params, double w1, double w2, double distance_km) {
  require_intensity(w1, "omega1");
  require_intensity(w2, "omega2");
  const double eta = arm_transmittance(params, distance_km);
  return Probability(click_probability(params.dark_count, 2, eta * (w1 + w2)));
}

Probability decoy2_gain(const ChannelParams& params, double w1, double w2, double distance_km) {
  // Ports receive eta (sqrt w1 +- sqrt w2)^2 / 2; misalignment only moves
  // intensity between them, so the click probability sees the total.
  require_intensity(w1, "omega1");
  require_intensity(w2, "omega2");
  const double eta = arm_transmittance(params, distance_km);
  return Probability(click_probability(params.dark_count, 2, eta * (w1 + w2)));
}

Probability fock_yield(const ChannelParams& params, int n, int m, double distance_km) {
  require(n >= 0 && m >= 0, "photon numbers must be >= 0");
  const double eta = arm_transmittance(params, distance_km);
  const double v = -std::expm1(2.0 * std::log1p(-params.dark_count) + (n + m) * std::log1p(-eta));
  return Probability(std::clamp(v, 0.0, 1.0));
}

GainTable build_gain_table(const ChannelParams& params, const IntensityConfig& intensities, double distance_km) {
  params.validate();
  GainTable t;
  t.mu = intensities.mu();
  const auto code = code_gain_and_error(params, intensities.mu(), distance_km);
  t.code_gain = code.gain;
  t.code_error = code.error;
  for (double a : intensities.i1()) {
    for (double b : intensities.i1()) t.d1[{a, b}] = decoy1_gain(params, a, b, distance_km);
  }
  for (double a : intensities.i2()) {
    for (double b : intensities.i2()) t.d2[{a, b}] = decoy2_gain(params, a, b, distance_km);
  }
  t.provenance = Provenance::kModeled;
  return t;
}

void write_gain_table_csv(std::ostream& out, const GainTable& table) {
  const std::string mu = fmt17(table.mu);
  out << "mode,omega1,omega2,gain\n";
  out << "code," << mu << ',' << mu << ',' << fmt17(table.code_gain) << '\n';
  out << "code_err," << mu << ',' << mu << ',' << fmt17(table.code_error) << '\n';
  for (const auto& [k, v] : table.d1) out << "d1," << fmt17(k.first) << ',' << fmt17(k.second) << ',' << fmt17(v) << '\n';
  for (const auto& [k, v] : table.d2) out << "d2," << fmt17(k.first) << ',' << fmt17(k.second) << ',' << fmt17(v) << '\n';
  if (!out) throw IoError(kModule, "failed writing gain table");
}

GainTable read_gain_table_csv(std::istream& in) {
  GainTable t;
  t.provenance = Provenance::kMeasured;
  std::string line;
  std::size_t line_no = 0;
  bool header = false, have_code = false, have_err = false;
  double code_mu = 0.0, err_mu = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "mode,omega1,omega2,gain") {
        throw DataIntegrityError(kModule, "gain table header must be 'mode,omega1,omega2,gain'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) {
      throw DataIntegrityError(kModule, "gain table line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const double w1 = parse_number(fields[1], line_no);
    const double w2 = parse_number(fields[2], line_no);
    const double g = parse_number(fields[3], line_no);
    const std::string& mode = fields[0];
    auto insert = [&](std::map<IntensityPair, double>& m) {
      if (!m.emplace(IntensityPair{w1, w2}, g).second) {
        throw DataIntegrityError(kModule, "gain table line " + std::to_string(line_no) + ": duplicate " + mode + " entry");
      }
    };
    if (mode == "code" || mode == "code_err") {
      if (w1 != w2) throw DataIntegrityError(kModule, "gain table line " + std::to_string(line_no) + ": code rows need omega1 == omega2");
      bool& seen = mode == "code" ? have_code : have_err;
      if (seen) throw DataIntegrityError(kModule, "gain table line " + std::to_string(line_no) + ": duplicate " + mode + " row");
      seen = true;
      (mode == "code" ? code_mu : err_mu) = w1;
      (mode == "code" ? t.code_gain : t.code_error) = g;
    } else if (mode == "d1") {
      insert(t.d1);
    } else if (mode == "d2") {
      insert(t.d2);
    } else {
      throw DataIntegrityError(kModule, "gain table line " + std::to_string(line_no) + ": unknown mode '" + mode + "'");
    }
  }
  if (in.bad()) throw IoError(kModule, "failed reading gain table");
  if (!header) throw DataIntegrityError(kModule, "gain table is empty");
  if (!have_code || !have_err) throw DataIntegrityError(kModule, "gain table needs both code and code_err rows");
  if (code_mu != err_mu) throw DataIntegrityError(kModule, "code and code_err rows disagree on mu");
  t.mu = code_mu;
  t.validate();
  return t;
}

}  // namespace channel
}  // namespace tfqkd
