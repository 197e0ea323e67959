#include "gasketlab/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gasketlab {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string kind_name(SubsetGenerator::Kind k) {
  switch (k) {
    case SubsetGenerator::Kind::CellUnion:
      return "cell-union";
    case SubsetGenerator::Kind::VertexSubset:
      return "vertex-subset";
    case SubsetGenerator::Kind::Slit:
      return "slit";
  }
  return "?";
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& val,
                            const std::string& want) {
  throw std::invalid_argument("config: key '" + key + "' expects " + want + ", got '" + val +
                              "'");
}

long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0') bad_value(key, v, "an integer");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos)
    bad_value(key, v, "an unsigned integer");
  return x;
}

double to_dbl(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  double x = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0') bad_value(key, v, "a number");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

Rational to_rat(const std::string& key, const std::string& v) {
  try {
    return rat_parse(v);
  } catch (const std::exception&) {
    bad_value(key, v, "a rational num/den");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, v, "a comma-separated list of numbers");
    out.push_back(to_dbl(key, item));
  }
  if (out.empty()) bad_value(key, v, "a nonempty list of numbers");
  return out;
}

SubsetGenerator::Kind to_kind(const std::string& key, const std::string& v) {
  if (v == "cell-union") return SubsetGenerator::Kind::CellUnion;
  if (v == "vertex-subset") return SubsetGenerator::Kind::VertexSubset;
  if (v == "slit") return SubsetGenerator::Kind::Slit;
  bad_value(key, v, "one of cell-union, vertex-subset, slit");
}

}  // namespace

std::string print_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# experiment configuration (canonical form)\n";
  os << "alphas = ";
  for (size_t i = 0; i < cfg.alphas.size(); ++i)
    os << (i ? "," : "") << fmt17(cfg.alphas[i]);
  os << "\n";
  os << "level = " << cfg.level << "\n";
  os << "ambient_pow = " << cfg.ambient_pow << "\n";
  os << "instances = " << cfg.instances << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "allow_wide_alpha = " << (cfg.allow_wide_alpha ? "true" : "false") << "\n";
  os << "verbose = " << (cfg.verbose ? "true" : "false") << "\n";
  os << "generator = " << kind_name(cfg.gen.kind) << "\n";
  os << "cell_level = " << cfg.gen.cell_level << "\n";
  os << "density = " << fmt17(cfg.gen.density) << "\n";
  os << "vertex_p = " << fmt17(cfg.gen.vertex_p) << "\n";
  os << "slit_level = " << cfg.gen.slit_level << "\n";
  os << "slit_len = " << cfg.gen.slit_len << "\n";
  os << "symmetrize = " << (cfg.gen.symmetrize ? "true" : "false") << "\n";
  os << "quad_h = " << fmt17(cfg.quad_h) << "\n";
  os << "lemma_level = " << cfg.lemma_level << "\n";
  os << "lemma_instances = " << cfg.lemma_instances << "\n";
  os << "p1_sq = " << rat_str(cfg.p1_sq) << "\n";
  os << "p2_sq = " << rat_str(cfg.p2_sq) << "\n";
  os << "p3_sq = " << rat_str(cfg.p3_sq) << "\n";
  os << "p5_sq = " << rat_str(cfg.p5_sq) << "\n";
  os << "scaling_level = " << cfg.scaling_level << "\n";
  os << "walks_dw = " << cfg.walks_dw << "\n";
  os << "walks_alpha = " << cfg.walks_alpha << "\n";
  os << "step_cap = " << cfg.step_cap << "\n";
  os << "out_dir = " << cfg.out_dir << "\n";
  return os.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not of the form key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has an empty key");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");

    if (key == "alphas")
      cfg.alphas = to_list(key, val);
    else if (key == "level")
      cfg.level = (int)to_int(key, val);
    else if (key == "ambient_pow")
      cfg.ambient_pow = (int)to_int(key, val);
    else if (key == "instances")
      cfg.instances = (int)to_int(key, val);
    else if (key == "seed")
      cfg.seed = to_uint(key, val);
    else if (key == "allow_wide_alpha")
      cfg.allow_wide_alpha = to_bool(key, val);
    else if (key == "verbose")
      cfg.verbose = to_bool(key, val);
    else if (key == "generator")
      cfg.gen.kind = to_kind(key, val);
    else if (key == "cell_level")
      cfg.gen.cell_level = (int)to_int(key, val);
    else if (key == "density")
      cfg.gen.density = to_dbl(key, val);
    else if (key == "vertex_p")
      cfg.gen.vertex_p = to_dbl(key, val);
    else if (key == "slit_level")
      cfg.gen.slit_level = (int)to_int(key, val);
    else if (key == "slit_len")
      cfg.gen.slit_len = (int)to_int(key, val);
    else if (key == "symmetrize")
      cfg.gen.symmetrize = to_bool(key, val);
    else if (key == "quad_h")
      cfg.quad_h = to_dbl(key, val);
    else if (key == "lemma_level")
      cfg.lemma_level = (int)to_int(key, val);
    else if (key == "lemma_instances")
      cfg.lemma_instances = (int)to_int(key, val);
    else if (key == "p1_sq")
      cfg.p1_sq = to_rat(key, val);
    else if (key == "p2_sq")
      cfg.p2_sq = to_rat(key, val);
    else if (key == "p3_sq")
      cfg.p3_sq = to_rat(key, val);
    else if (key == "p5_sq")
      cfg.p5_sq = to_rat(key, val);
    else if (key == "scaling_level")
      cfg.scaling_level = (int)to_int(key, val);
    else if (key == "walks_dw")
      cfg.walks_dw = to_int(key, val);
    else if (key == "walks_alpha")
      cfg.walks_alpha = to_int(key, val);
    else if (key == "step_cap")
      cfg.step_cap = to_int(key, val);
    else if (key == "out_dir") {
      if (val.empty()) bad_value(key, val, "a directory path");
      cfg.out_dir = val;
    } else
      throw std::invalid_argument("config: unknown key '" + key +
                                  "' (run with --print-config for the schema)");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string s = print_config(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", (unsigned long long)config_hash(cfg));
  return buf;
}

}  // namespace gasketlab
