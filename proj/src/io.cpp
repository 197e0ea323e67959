#include "gasketlab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gasketlab/spline.hpp"
#include "json.hpp"

namespace gasketlab {

namespace {

using nlohmann::json;

json seed_plan_json(const ExperimentConfig& cfg) {
  json sp;
  sp["master"] = cfg.seed;
  sp["instance_domains"] = "stream(instance)";
  sp["walk_dimension_fit"] = "stream(2^20)";
  sp["stability_fits"] = "stream(2^20 + 1 + alpha_index)";
  return sp;
}

json report_head(const ExperimentConfig& cfg, const std::string& battery) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["battery"] = battery;
  j["config_hash"] = config_hash_hex(cfg);
  j["seed"] = cfg.seed;
  j["seed_plan"] = seed_plan_json(cfg);
  j["config_text"] = print_config(cfg);
  return j;
}

json num_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

std::string fmt_field(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string bhi_ratios_csv(const BhiReport& rep) {
  std::ostringstream os;
  os << "alpha,instance_id,level,R,flags\n";
  for (const BhiAlphaReport& ar : rep.per_alpha)
    for (const BhiInstance& row : ar.rows)
      os << fmt_field(ar.alpha) << ',' << row.id << ',' << ar.level << ','
         << fmt_field(row.R) << ',' << row.flags << "\n";
  return os.str();
}

std::string lemma_constants_csv(const LemmaReport& rep) {
  std::ostringstream os;
  os << "lemma,alpha,instance_id,c_hat_low,c_hat_high,flags\n";
  for (const LemmaAlphaReport& ar : rep.per_alpha)
    for (const LemmaInstance& row : ar.rows) {
      const std::string a = fmt_field(ar.alpha);
      os << "escape," << a << ',' << row.id << ',' << fmt_field(row.c_escape) << ','
         << fmt_field(row.c_escape) << ',' << row.flags << "\n";
      os << "upper," << a << ',' << row.id << ',' << fmt_field(row.c_upper) << ','
         << fmt_field(row.c_upper) << ',' << row.flags << "\n";
      os << "factorization," << a << ',' << row.id << ',' << fmt_field(row.c_fac_low) << ','
         << fmt_field(row.c_fac_high) << ',' << row.flags << "\n";
    }
  return os.str();
}

std::string bhi_report_json(const ExperimentConfig& cfg, const BhiReport& rep) {
  json j = report_head(cfg, "ratio");
  j["level"] = rep.level;
  j["instances"] = rep.instances;
  json pa = json::array();
  long long flagged = 0;
  for (const BhiAlphaReport& ar : rep.per_alpha) {
    json a;
    a["alpha"] = ar.alpha;
    a["exploratory"] = ar.exploratory;
    a["max_R"] = num_or_null(ar.max_R);
    a["median_R"] = num_or_null(ar.median_R);
    a["q90_R"] = num_or_null(ar.q90_R);
    a["excluded"] = ar.excluded;
    a["rows"] = (long long)ar.rows.size();
    pa.push_back(a);
    flagged += ar.excluded;
  }
  j["per_alpha"] = pa;
  j["diagnostics"]["excluded_total"] = flagged;
  return j.dump(2) + "\n";
}

std::string lemma_report_json(const ExperimentConfig& cfg, const LemmaReport& rep) {
  json j = report_head(cfg, "lemmas");
  j["level"] = rep.level;
  j["instances"] = rep.instances;
  json pa = json::array();
  for (const LemmaAlphaReport& ar : rep.per_alpha) {
    json a;
    a["alpha"] = ar.alpha;
    a["c_fac_max"] = num_or_null(ar.c_fac_max);
    a["c_fac_min"] = num_or_null(ar.c_fac_min);
    a["escape_half_ratio"] = num_or_null(ar.escape_half_ratio);
    a["upper_half_ratio"] = num_or_null(ar.upper_half_ratio);
    a["fac_homothety_rel"] = num_or_null(ar.fac_homothety_rel);
    a["lambda_tail_bound"] = num_or_null(ar.lambda_tail_bound);
    a["excluded"] = ar.excluded;
    json sw = json::array();
    for (const UpperSweepPoint& pt : ar.sweep) {
      json p;
      p["p3_sq"] = pt.p3_sq;
      p["c_upper"] = num_or_null(pt.c_upper);
      sw.push_back(p);
    }
    a["upper_sweep"] = sw;
    pa.push_back(a);
  }
  j["per_alpha"] = pa;
  return j.dump(2) + "\n";
}

std::string scaling_report_json(const ExperimentConfig& cfg, const ScalingReport& rep) {
  json j = report_head(cfg, "scaling");
  json dw;
  dw["slope"] = rep.dw.slope;
  dw["target"] = rep.dw_target;
  dw["log2_r"] = rep.dw.log2_r;
  dw["log2_mean"] = rep.dw.log2_mean;
  j["walk_dimension"] = dw;
  json st = json::array();
  for (const ScalingReport::AlphaSlope& as : rep.stability) {
    json a;
    a["alpha"] = as.alpha;
    a["slope"] = as.fit.slope;
    a["log2_r"] = as.fit.log2_r;
    a["log2_mean"] = as.fit.log2_mean;
    st.push_back(a);
  }
  j["stability"] = st;
  j["lambda_dilation_exact"] = rep.lambda_exact;
  return j.dump(2) + "\n";
}

std::string spline_dump_csv(int depth, int one) {
  if (depth < 0 || depth > 12)
    throw std::invalid_argument("spline dump: depth must be in [0, 12]");
  if (one < 0 || one > 2) throw std::invalid_argument("spline dump: corner must be 0, 1 or 2");
  std::ostringstream os;
  os << "path,v0,v1,v2,d0,d1,d2\n";
  long long total = 1;
  for (int i = 0; i < depth; ++i) total *= 3;
  for (long long idx = 0; idx < total; ++idx) {
    std::string path(depth, '0');
    std::vector<int> digits(depth, 0);
    long long rem = idx;
    for (int d = depth - 1; d >= 0; --d) {
      digits[d] = (int)(rem % 3);
      path[d] = (char)('0' + digits[d]);
      rem /= 3;
    }
    SplineState s = phi0_state(digits, one);
    os << (depth == 0 ? "-" : path);
    for (const Rational& v : s) os << ',' << rat_str(v);
    os << "\n";
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(content.data(), (std::streamsize)content.size());
  out.flush();
  if (!out.good()) throw std::runtime_error("short write to '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void append_manifest(const std::string& dir, const std::string& battery,
                     const ExperimentConfig& cfg, const std::vector<std::string>& outputs,
                     double wall_seconds,
                     const std::vector<std::pair<std::string, double>>& tolerances,
                     const std::string& diagnostics) {
  const std::string path = dir + "/manifest.json";
  json arr = json::array();
  {
    std::ifstream probe(path, std::ios::binary);
    if (probe) {
      arr = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
      if (!arr.is_array())
        throw std::runtime_error("manifest at '" + path + "' is not a JSON array");
    }
  }
  json e;
  e["tool_version"] = kToolVersion;
  e["battery"] = battery;
  e["config_hash"] = config_hash_hex(cfg);
  e["seed"] = cfg.seed;
  e["seed_plan"] = seed_plan_json(cfg);
  e["wall_seconds"] = wall_seconds;
  e["outputs"] = outputs;
  e["tolerances"] = json::object();
  for (const auto& [key, val] : tolerances) e["tolerances"][key] = val;
  e["diagnostics"] = diagnostics;
  arr.push_back(e);
  write_file(path, arr.dump(2) + "\n");
}

}  // namespace gasketlab
