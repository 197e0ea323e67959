#pragma once

#include <cstdint>
#include <string>

#include "gasketlab/harness.hpp"

namespace gasketlab {

inline constexpr const char* kToolVersion = "gasketlab 1.0";
inline constexpr int kReportSchemaVersion = 1;

// Canonical key=value form: fixed key order, floats at 17 significant digits,
// rationals as num/den, lists comma-separated. parse(print(c)) == c.
std::string print_config(const ExperimentConfig& cfg);

// Parses the same form. Blank lines and '#' comments are skipped. Keys outside
// the schema, repeated keys, and malformed values raise invalid_argument with
// the offending key named; keys left out keep their defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// FNV-1a over the canonical print, so a report alone pins down its experiment.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

}  // namespace gasketlab
