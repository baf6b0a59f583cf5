#include "cbm/case_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cbm/errors.hpp"

namespace cbm {

namespace {

struct Row {
  const char* description;
  double beta;
  double c_p;
  double c_down;
  double failure_threshold;
  double delta_t;
};

// beta, C_P, C_down, L, delta_t; C_R = 3500 and v = 0.0115 for every case.
constexpr Row kCaseTable[kNumBuiltinCases] = {
    {"Reduced repair costs", 4.63, 300.0, 2000.0, 8.0, 100.0},
    {"Baseline", 4.63, 600.0, 2000.0, 8.0, 100.0},
    {"Increased repair costs", 4.63, 1500.0, 2000.0, 8.0, 100.0},
    {"Increased failure limit", 4.63, 600.0, 2000.0, 12.0, 100.0},
    {"Reduced downtimes cost", 4.63, 600.0, 500.0, 8.0, 100.0},
    {"Slower degradation", 6.5, 600.0, 2000.0, 8.0, 100.0},
    {"Longer inspection period", 4.63, 600.0, 2000.0, 8.0, 150.0},
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& value, const std::string& key, const std::string& source, int line) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(source, line, "field '" + key + "': cannot parse '" + value + "' as a number");
  }
  return out;
}

}  // namespace

void CaseConfig::validate() const {
  if (id.empty()) throw ParameterError("case: id must not be empty");
  model().validate();
  if (horizon < 1) throw ParameterError("case: horizon must be positive");
  if (iterations < 1) throw ParameterError("case: iterations must be positive");
}

MaintenanceModel CaseConfig::model() const {
  MaintenanceModel m;
  m.process = {v_coeff, beta, delta_t};
  m.costs = {c_p, c_r, c_down, failure_threshold};
  m.spread = spread;
  return m;
}

std::string CaseConfig::to_text() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "id = " << id << '\n'
     << "description = " << description << '\n'
     << "beta = " << beta << '\n'
     << "c_p = " << c_p << '\n'
     << "c_r = " << c_r << '\n'
     << "c_down = " << c_down << '\n'
     << "failure_threshold = " << failure_threshold << '\n'
     << "delta_t = " << delta_t << '\n'
     << "v_coeff = " << v_coeff << '\n'
     << "repair_spread = " << (spread == RepairSpread::SumOverSix ? "sum" : "width") << '\n'
     << "horizon = " << horizon << '\n'
     << "iterations = " << iterations << '\n'
     << "seed = " << seed << '\n';
  return ss.str();
}

std::uint64_t CaseConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

CaseConfig builtin_case(int id) {
  if (id < 1 || id > kNumBuiltinCases) {
    throw ParameterError("builtin case id must be in 1.." + std::to_string(kNumBuiltinCases));
  }
  const Row& r = kCaseTable[id - 1];
  CaseConfig c;
  c.id = std::to_string(id);
  c.description = r.description;
  c.beta = r.beta;
  c.c_p = r.c_p;
  c.c_down = r.c_down;
  c.failure_threshold = r.failure_threshold;
  c.delta_t = r.delta_t;
  return c;
}

CaseConfig parse_case_text(std::string_view text, const std::string& source) {
  static const std::set<std::string> required{"id", "beta", "c_p", "c_r", "c_down",
                                              "failure_threshold", "delta_t"};
  CaseConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash_pos = raw.find('#');
    const std::string content = trim(hash_pos == std::string::npos ? raw : raw.substr(0, hash_pos));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (value.empty()) throw ParseError(source, line, "field '" + key + "' has no value");
    if (!seen.insert(key).second) throw ParseError(source, line, "duplicate field '" + key + "'");

    if (key == "id") c.id = value;
    else if (key == "description") c.description = value;
    else if (key == "beta") c.beta = parse_number<double>(value, key, source, line);
    else if (key == "c_p") c.c_p = parse_number<double>(value, key, source, line);
    else if (key == "c_r") c.c_r = parse_number<double>(value, key, source, line);
    else if (key == "c_down") c.c_down = parse_number<double>(value, key, source, line);
    else if (key == "failure_threshold") c.failure_threshold = parse_number<double>(value, key, source, line);
    else if (key == "delta_t") c.delta_t = parse_number<double>(value, key, source, line);
    else if (key == "v_coeff") c.v_coeff = parse_number<double>(value, key, source, line);
    else if (key == "horizon") c.horizon = parse_number<int>(value, key, source, line);
    else if (key == "iterations") c.iterations = parse_number<int>(value, key, source, line);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key, source, line);
    else if (key == "repair_spread") {
      if (value == "sum") c.spread = RepairSpread::SumOverSix;
      else if (value == "width") c.spread = RepairSpread::WidthOverSix;
      else throw ParseError(source, line, "field 'repair_spread' must be 'sum' or 'width'");
    } else {
      throw ParseError(source, line, "unknown field '" + key + "'");
    }
  }
  for (const auto& k : required) {
    if (!seen.count(k)) throw ParseError(source, line, "missing required field '" + k + "'");
  }
  c.validate();
  return c;
}

CaseConfig load_case(const std::string& spec) {
  std::string id = spec;
  if (!id.empty() && id.back() == '*') id.pop_back();
  int n = 0;
  const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), n);
  if (!id.empty() && ec == std::errc() && ptr == id.data() + id.size()) return builtin_case(n);

  std::ifstream in(spec);
  if (!in) throw MissingArtifactError("case file not found: " + spec);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case_text(ss.str(), spec);
}

}  // namespace cbm
