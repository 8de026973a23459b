#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "enttest/testers.hpp"

namespace enttest {

namespace {

struct Field {
  const char* key;
  double ThresholdConfig::*member;
  double SampleMultipliers::*mult;
};

constexpr Field kFields[] = {
    {"c_hellinger_reject", &ThresholdConfig::c_hellinger_reject, nullptr},
    {"c_tv_reject", &ThresholdConfig::c_tv_reject, nullptr},
    {"c_heavy_low", &ThresholdConfig::c_heavy_low, nullptr},
    {"c_heavy_high", &ThresholdConfig::c_heavy_high, nullptr},
    {"c_lowmass_mass", &ThresholdConfig::c_lowmass_mass, nullptr},
    {"c_mass_diff", &ThresholdConfig::c_mass_diff, nullptr},
    {"c_lowmass_tv", &ThresholdConfig::c_lowmass_tv, nullptr},
    {"c_rejection_cap", &ThresholdConfig::c_rejection_cap, nullptr},
    {"c_T_threshold", &ThresholdConfig::c_T_threshold, nullptr},
    {"c_l2_eps", &ThresholdConfig::c_l2_eps, nullptr},
    {"c_l2_threshold", &ThresholdConfig::c_l2_threshold, nullptr},
    {"c_massS_diff", &ThresholdConfig::c_massS_diff, nullptr},
    {"c_Z_threshold", &ThresholdConfig::c_Z_threshold, nullptr},
    {"c_dec", &ThresholdConfig::c_dec, nullptr},
    {"c_split", &ThresholdConfig::c_split, nullptr},
    {"c_bn_eps1", &ThresholdConfig::c_bn_eps1, nullptr},
    {"c_bn_eps2", &ThresholdConfig::c_bn_eps2, nullptr},
    {"c_identity_reject", &ThresholdConfig::c_identity_reject, nullptr},
    {"mult.coin", nullptr, &SampleMultipliers::coin},
    {"mult.heavy", nullptr, &SampleMultipliers::heavy},
    {"mult.hellinger", nullptr, &SampleMultipliers::hellinger},
    {"mult.tv", nullptr, &SampleMultipliers::tv},
    {"mult.l2", nullptr, &SampleMultipliers::l2},
    {"mult.lowmass_mass", nullptr, &SampleMultipliers::lowmass_mass},
    {"mult.mass_compare", nullptr, &SampleMultipliers::mass_compare},
    {"mult.bias", nullptr, &SampleMultipliers::bias},
    {"mult.mass_S", nullptr, &SampleMultipliers::mass_S},
    {"mult.z", nullptr, &SampleMultipliers::z},
    {"mult.bn_closeness", nullptr, &SampleMultipliers::bn_closeness},
    {"mult.bn_identity", nullptr, &SampleMultipliers::bn_identity},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : kFields) keys.emplace_back(f.key);
  return keys;
}

double& config_field(ThresholdConfig& cfg, const std::string& key) {
  for (const Field& f : kFields) {
    if (key != f.key) continue;
    return f.member ? cfg.*(f.member) : cfg.mult.*(f.mult);
  }
  throw ConfigError("unknown key '" + key + "'");
}

void ThresholdConfig::validate() const {
  ThresholdConfig copy = *this;
  for (const Field& f : kFields) {
    const double v = config_field(copy, f.key);
    if (!(v > 0) || !std::isfinite(v))
      throw ConfigError(std::string(f.key) + " must be a positive finite number");
  }
  if (c_heavy_high < 2 * c_heavy_low) throw ConfigError("c_heavy_high must be >= 2 c_heavy_low");
}

ThresholdConfig read_config(std::istream& is) {
  ThresholdConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    double& slot = config_field(cfg, key);
    try {
      std::size_t used = 0;
      slot = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad number '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ThresholdConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return read_config(is);
}

void write_config(std::ostream& os, const ThresholdConfig& cfg,
                  const std::vector<std::string>& header_comments) {
  for (const std::string& c : header_comments) os << "# " << c << '\n';
  ThresholdConfig copy = cfg;
  os << std::setprecision(17);
  for (const Field& f : kFields) os << f.key << " = " << config_field(copy, f.key) << '\n';
}

}  // namespace enttest
