#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gasketlab/config.hpp"
#include "gasketlab/harness.hpp"

namespace gasketlab {

// Field formatting shared by every emitter: floats at 17 significant digits
// (round-trip exact), rationals as num/den, NaN as an empty field so flagged
// instances keep their rows with the value columns blank.
std::string fmt_field(double x);

// CSV products. Row order is deterministic: the alpha grid in config order,
// instances ascending inside each alpha, lemmas in a fixed order per instance.
std::string bhi_ratios_csv(const BhiReport& rep);
std::string lemma_constants_csv(const LemmaReport& rep);

// report.json payloads: schema-versioned, embedding the canonical config text,
// its hash and the seed plan — and no timing, so identical configs produce
// byte-identical reports. Wall time lives only in the run manifest.
std::string bhi_report_json(const ExperimentConfig& cfg, const BhiReport& rep);
std::string lemma_report_json(const ExperimentConfig& cfg, const LemmaReport& rep);
std::string scaling_report_json(const ExperimentConfig& cfg, const ScalingReport& rep);

// One CSV row per descent path of the given length (3^depth rows): the exact
// corner-spline state reached along that path.
std::string spline_dump_csv(int depth, int one = 0);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Appends one run entry to <dir>/manifest.json (a JSON array, created on
// first use, never rewritten beyond the append). `tolerances` records the
// pass/fail thresholds the run was judged against.
void append_manifest(const std::string& dir, const std::string& battery,
                     const ExperimentConfig& cfg, const std::vector<std::string>& outputs,
                     double wall_seconds,
                     const std::vector<std::pair<std::string, double>>& tolerances,
                     const std::string& diagnostics);

}  // namespace gasketlab
