#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cbm/environment.hpp"

namespace cbm {

/// One case study: process and cost parameters plus evaluation settings.
struct CaseConfig {
  std::string id = "2";
  std::string description = "Baseline";
  double beta = 4.63;
  double c_p = 600.0;
  double c_r = 3500.0;
  double c_down = 2000.0;
  double failure_threshold = 8.0;
  double delta_t = 100.0;
  double v_coeff = 0.0115;
  RepairSpread spread = RepairSpread::SumOverSix;
  int horizon = 1000;
  int iterations = 200;
  std::uint64_t seed = 1;

  void validate() const;
  MaintenanceModel model() const;

  /// Canonical `key = value` text; parse_case_text(to_text()) round-trips.
  std::string to_text() const;
  /// FNV-1a hash of to_text(), printed in output headers.
  std::uint64_t hash() const;
};

inline constexpr int kNumBuiltinCases = 7;

/// Builtin case studies 1..7; case 2 is the baseline.
CaseConfig builtin_case(int id);

/// Parses `key = value` lines; '#' starts a comment. Unknown keys, malformed
/// numbers and missing required keys raise ParseError with the line number;
/// out-of-range values raise ParameterError.
CaseConfig parse_case_text(std::string_view text, const std::string& source = "<case>");

/// `spec` is a builtin id ("1".."7", "2*") or a path to a case file.
CaseConfig load_case(const std::string& spec);

}  // namespace cbm
