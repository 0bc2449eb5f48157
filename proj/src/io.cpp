#include "parawave/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "parawave/bump.hpp"
#include "parawave/errors.hpp"

namespace parawave {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kEstimateHeader =
    "n,R,q,family,lhs,normalizer,ratio,slope,residual,seed";

// 1-based line/column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Position of the quoted key `name`, searching from `from`.  Error messages
// only; when the key cannot be found the document start is reported.
std::pair<std::size_t, std::size_t> locate_key(const std::string& text, const std::string& name,
                                               std::size_t from = 0) {
  const std::string needle = "\"" + name + "\"";
  const std::size_t pos = text.find(needle, from);
  if (pos == std::string::npos) return {1, 1};
  return line_col(text, pos);
}

std::size_t key_offset(const std::string& text, const std::string& name, std::size_t from = 0) {
  const std::size_t pos = text.find("\"" + name + "\"", from);
  return pos == std::string::npos ? 0 : pos;
}

[[noreturn]] void fail_at(const std::string& source, const std::string& text,
                          const std::string& key, std::size_t from, const std::string& msg) {
  const auto [line, col] = locate_key(text, key, from);
  throw InvalidConfig(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& scope, const std::string& source, const std::string& text,
                std::size_t from) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) known = true;
    if (!known)
      fail_at(source, text, item.key(), from, "unknown key '" + item.key() + "' in " + scope);
  }
}

double require_number(const json& obj, const std::string& key, const std::string& source,
                      const std::string& text, std::size_t from) {
  const json& v = obj.at(key);
  if (!v.is_number()) fail_at(source, text, key, from, "field '" + key + "' must be a number");
  return v.get<double>();
}

long long require_integer(const json& obj, const std::string& key, const std::string& source,
                          const std::string& text, std::size_t from) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail_at(source, text, key, from, "field '" + key + "' must be an integer");
  return v.get<long long>();
}

// "q" accepts a number, an exact rational "a/b", or "critical".
double parse_exponent(const json& v, int n, const std::string& source, const std::string& text) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "critical") return critical_exponent(n);
    const std::size_t slash = s.find('/');
    if (slash != std::string::npos) {
      char* end = nullptr;
      const double num = std::strtod(s.c_str(), &end);
      if (end == s.c_str() + slash) {
        char* end2 = nullptr;
        const double den = std::strtod(s.c_str() + slash + 1, &end2);
        if (end2 == s.c_str() + s.size() && den != 0.0) return num / den;
      }
      fail_at(source, text, "q", 0, "field 'q' rational form must be 'a/b', got '" + s + "'");
    }
    char* end = nullptr;
    const double value = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) return value;
    fail_at(source, text, "q", 0,
            "field 'q' must be a number, 'a/b', or 'critical', got '" + s + "'");
  }
  fail_at(source, text, "q", 0, "field 'q' must be a number or string");
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_field(const std::string& field, const std::string& source, std::size_t lineno,
                   const std::string& what) {
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size())
    throw InvalidConfig(source + ":" + std::to_string(lineno) + ": malformed CSV row: " + what +
                        " '" + field + "' is not a number");
  return value;
}

json vec_to_json(const Vec& v, int n) {
  json arr = json::array();
  for (int i = 0; i < n; ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const json& arr, int n, const std::string& source, const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n)
    throw InvalidConfig(source + ": " + what + " must be an array of " + std::to_string(n) +
                        " numbers");
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    if (!arr[i].is_number())
      throw InvalidConfig(source + ": " + what + " must be an array of numbers");
    v[i] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

// ------------------------------------------------------------ configuration

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(source + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidConfig(source + ":1:1: top-level must be an object");

  RunConfig cfg = default_run_config();
  check_keys(j, {"n", "R", "q", "delta", "family", "seed", "workers", "tolerances", "budgets"},
             "the top level", source, text, 0);

  if (j.contains("n")) {
    const long long n = require_integer(j, "n", source, text, 0);
    if (n < 1 || n > kMaxDim) fail_at(source, text, "n", 0, "field 'n' must be in 1..3");
    cfg.experiment.n = static_cast<int>(n);
  }
  if (j.contains("R")) {
    const json& arr = j.at("R");
    if (!arr.is_array() || arr.empty())
      fail_at(source, text, "R", 0, "field 'R' must be a nonempty array of scales");
    cfg.experiment.R_list.clear();
    for (const json& v : arr) {
      if (!v.is_number()) fail_at(source, text, "R", 0, "field 'R' entries must be numbers");
      cfg.experiment.R_list.push_back(v.get<double>());
    }
  }
  if (j.contains("q")) {
    const double q = parse_exponent(j.at("q"), cfg.experiment.n, source, text);
    if (!(q > 0.0)) fail_at(source, text, "q", 0, "field 'q' must be positive");
    cfg.experiment.q = q;
  }
  if (j.contains("delta")) {
    const double delta = require_number(j, "delta", source, text, 0);
    if (!(delta > 0.0 && delta < 0.5))
      fail_at(source, text, "delta", 0, "field 'delta' must lie in (0, 1/2)");
    cfg.experiment.delta = delta;
  }
  if (j.contains("family")) {
    const json& v = j.at("family");
    if (!v.is_string()) fail_at(source, text, "family", 0, "field 'family' must be a string");
    cfg.experiment.family = v.get<std::string>();
    if (cfg.experiment.family != "plate" && cfg.experiment.family != "random" &&
        cfg.experiment.family != "packet")
      fail_at(source, text, "family", 0, "field 'family' must be one of plate|random|packet");
  }
  if (j.contains("seed")) {
    const long long seed = require_integer(j, "seed", source, text, 0);
    if (seed < 0) fail_at(source, text, "seed", 0, "field 'seed' must be nonnegative");
    cfg.experiment.seed = static_cast<std::uint64_t>(seed);
  }
  if (j.contains("workers")) {
    const long long workers = require_integer(j, "workers", source, text, 0);
    if (workers < 1) fail_at(source, text, "workers", 0, "field 'workers' must be at least 1");
    cfg.experiment.workers = static_cast<int>(workers);
  }

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    const std::size_t scope = key_offset(text, "tolerances");
    if (!t.is_object())
      fail_at(source, text, "tolerances", 0, "field 'tolerances' must be an object");
    check_keys(t,
               {"reconstruction", "probability_drift", "slope_window", "subcritical_slope_min",
                "drift_factor", "support_energy"},
               "tolerances", source, text, scope);
    const auto positive = [&](const char* key, double* slot) {
      if (!t.contains(key)) return;
      const double v = require_number(t, key, source, text, scope);
      if (!(v > 0.0))
        fail_at(source, text, key, scope, std::string("tolerance '") + key + "' must be positive");
      *slot = v;
    };
    positive("reconstruction", &cfg.tolerances.reconstruction);
    positive("probability_drift", &cfg.tolerances.probability_drift);
    positive("slope_window", &cfg.tolerances.slope_window);
    positive("subcritical_slope_min", &cfg.tolerances.subcritical_slope_min);
    positive("drift_factor", &cfg.tolerances.drift_factor);
    positive("support_energy", &cfg.tolerances.support_energy);
    if (cfg.tolerances.drift_factor < 1.0)
      fail_at(source, text, "drift_factor", scope, "tolerance 'drift_factor' must be at least 1");
    if (cfg.tolerances.support_energy > 1.0)
      fail_at(source, text, "support_energy", scope,
              "tolerance 'support_energy' must be at most 1");
  }

  if (j.contains("budgets")) {
    const json& b = j.at("budgets");
    const std::size_t scope = key_offset(text, "budgets");
    if (!b.is_object()) fail_at(source, text, "budgets", 0, "field 'budgets' must be an object");
    check_keys(b, {"samples", "refine", "iterations", "trials", "tubes"}, "budgets", source, text,
               scope);
    const auto bounded = [&](const char* key, long long lo) {
      const long long v = require_integer(b, key, source, text, scope);
      if (v < lo)
        fail_at(source, text, key, scope,
                std::string("budget '") + key + "' must be at least " + std::to_string(lo));
      return v;
    };
    if (b.contains("samples")) cfg.budgets.samples = static_cast<std::size_t>(bounded("samples", 1));
    if (b.contains("refine")) cfg.budgets.refine = static_cast<int>(bounded("refine", 1));
    if (b.contains("iterations"))
      cfg.budgets.iterations = static_cast<int>(bounded("iterations", 0));
    if (b.contains("trials")) cfg.budgets.trials = static_cast<std::size_t>(bounded("trials", 1));
    if (b.contains("tubes")) cfg.budgets.tubes = static_cast<std::size_t>(bounded("tubes", 2));
  }

  cfg.experiment.samples = cfg.budgets.samples;
  cfg.experiment.refine = cfg.budgets.refine;

  // Backstop: the estimator's own validation covers anything missed above
  // (e.g. R entries must be powers of two), so every consumed field is
  // checked before any work begins.
  try {
    validate(cfg.experiment);
  } catch (const InvalidConfig& e) {
    const std::string msg = e.what();
    std::string key = "n";
    if (msg.find("R_list") != std::string::npos) key = "R";
    else if (msg.find(".q") != std::string::npos) key = "q";
    else if (msg.find("delta") != std::string::npos) key = "delta";
    else if (msg.find("family") != std::string::npos) key = "family";
    else if (msg.find("samples") != std::string::npos) key = "samples";
    else if (msg.find("refine") != std::string::npos) key = "refine";
    else if (msg.find("workers") != std::string::npos) key = "workers";
    fail_at(source, text, key, 0, msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path), path);
}

// ------------------------------------------------- decomposition documents

std::string decomposition_to_json(const WavePacketDecomposition& d) {
  json doc;
  doc["n"] = d.n;
  doc["R"] = d.R;
  doc["delta"] = d.delta;
  doc["side"] = d.side;
  doc["bump"] = {{"rho", d.rho}, {"refine", d.refine}};
  json tubes = json::array();
  json coeffs = json::array();
  for (const WavePacket& p : d.packets) {
    tubes.push_back({{"x0", vec_to_json(p.tube.x0, d.n)}, {"v", vec_to_json(p.tube.v, d.n)}});
    coeffs.push_back({p.coefficient.real(), p.coefficient.imag()});
  }
  doc["tubes"] = std::move(tubes);
  doc["coefficients"] = std::move(coeffs);
  return doc.dump(2) + "\n";
}

WavePacketDecomposition decomposition_from_json(const std::string& text,
                                                const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(source + ": " + e.what());
  }
  if (!doc.is_object()) throw InvalidConfig(source + ":1:1: top-level must be an object");
  check_keys(doc, {"n", "R", "delta", "side", "bump", "tubes", "coefficients"},
             "a decomposition document", source, text, 0);
  for (const char* key : {"n", "R", "delta", "side", "bump", "tubes"})
    if (!doc.contains(key))
      fail_at(source, text, key, 0, std::string("missing required field '") + key + "'");

  WavePacketDecomposition d;
  d.n = static_cast<int>(require_integer(doc, "n", source, text, 0));
  if (d.n < 1 || d.n > kMaxDim) fail_at(source, text, "n", 0, "field 'n' must be in 1..3");
  d.R = require_number(doc, "R", source, text, 0);
  d.delta = require_number(doc, "delta", source, text, 0);
  d.side = static_cast<int>(require_integer(doc, "side", source, text, 0));
  if (d.side != 1 && d.side != 2) fail_at(source, text, "side", 0, "field 'side' must be 1 or 2");

  const json& bump = doc.at("bump");
  const std::size_t bump_scope = key_offset(text, "bump");
  if (!bump.is_object()) fail_at(source, text, "bump", 0, "field 'bump' must be an object");
  check_keys(bump, {"rho", "refine"}, "bump", source, text, bump_scope);
  for (const char* key : {"rho", "refine"})
    if (!bump.contains(key))
      fail_at(source, text, "bump", 0, std::string("bump must carry '") + key + "'");
  d.rho = require_number(bump, "rho", source, text, bump_scope);
  d.refine = static_cast<int>(require_integer(bump, "refine", source, text, bump_scope));
  if (d.refine < 1) fail_at(source, text, "refine", bump_scope, "bump 'refine' must be at least 1");
  if (!(d.rho > 0.0 && d.rho <= 1.0))
    fail_at(source, text, "rho", bump_scope, "bump 'rho' must lie in (0, 1]");

  const json& tubes = doc.at("tubes");
  if (!tubes.is_array()) fail_at(source, text, "tubes", 0, "field 'tubes' must be an array");
  const json* coeffs = nullptr;
  if (doc.contains("coefficients")) {
    coeffs = &doc.at("coefficients");
    if (!coeffs->is_array() || coeffs->size() != tubes.size())
      fail_at(source, text, "coefficients", 0,
              "field 'coefficients' must be an array matching 'tubes'");
  }

  const Bump window(d.rho);
  d.packets.reserve(tubes.size());
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    const std::string label = "tubes[" + std::to_string(i) + "]";
    const json& entry = tubes[i];
    if (!entry.is_object() || !entry.contains("x0") || !entry.contains("v"))
      throw InvalidConfig(source + ": " + label + " must be an object with 'x0' and 'v'");
    check_keys(entry, {"x0", "v"}, label, source, text, 0);
    const Vec x0 = vec_from_json(entry.at("x0"), d.n, source, label + ".x0");
    const Vec v = vec_from_json(entry.at("v"), d.n, source, label + ".v");
    Tube tube;
    try {
      tube = tube_from_points(d.n, d.R, d.side, x0, v);
    } catch (const InvalidInput& e) {
      throw InvalidConfig(source + ": " + label + ": " + e.what());
    }
    Complex c(1.0, 0.0);
    if (coeffs) {
      const json& pair = (*coeffs)[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
        fail_at(source, text, "coefficients", 0,
                "coefficient " + std::to_string(i) + " must be [re, im]");
      c = Complex(pair[0].get<double>(), pair[1].get<double>());
    }
    WavePacket packet = canonical_packet(d.n, d.R, d.refine, d.side, tube.v_idx, tube.x_idx, window);
    packet.coefficient = c;
    d.packets.push_back(std::move(packet));
  }

  // Coefficient summary scalars are derived data; recompute them from the
  // document.  input_mass is not stored and stays 0.
  d.max_coefficient = 0.0;
  d.coefficient_l2 = 0.0;
  for (const WavePacket& p : d.packets) {
    d.max_coefficient = std::max(d.max_coefficient, std::abs(p.coefficient));
    d.coefficient_l2 += std::norm(p.coefficient);
  }
  d.coefficient_floor = d.max_coefficient * std::pow(d.R, -100.0 * d.n);
  d.gamma_class.assign(d.packets.size(), 0);
  for (std::size_t i = 0; i < d.packets.size(); ++i) {
    const double c = std::abs(d.packets[i].coefficient);
    if (c > 0.0 && d.max_coefficient > 0.0)
      d.gamma_class[i] = static_cast<int>(
          std::max(0.0, std::floor(std::log2(d.max_coefficient / c))));
  }
  return d;
}

std::string tube_family_to_json(int n, double R, double delta, int side,
                                const std::vector<Tube>& tubes) {
  json doc;
  doc["n"] = n;
  doc["R"] = R;
  doc["delta"] = delta;
  doc["side"] = side;
  doc["bump"] = {{"rho", 0.75}, {"refine", 1}};
  json arr = json::array();
  for (const Tube& t : tubes)
    arr.push_back({{"x0", vec_to_json(t.x0, n)}, {"v", vec_to_json(t.v, n)}});
  doc["tubes"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// ----------------------------------------------------------------- reports

std::string format_double(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

std::string estimate_csv(const EstimateReport& report) {
  std::string out = std::string(kEstimateHeader) + "\n";
  for (const ScalingPoint& p : report.points) {
    out += std::to_string(report.n) + ",";
    out += format_double(p.R) + ",";
    out += format_double(report.q) + ",";
    out += report.family + ",";
    out += format_double(p.lhs) + ",";
    out += format_double(p.normalizer) + ",";
    out += format_double(p.ratio) + ",";
    out += format_double(report.fitted ? report.slope : std::nan("")) + ",";
    out += format_double(report.fitted ? report.residual : std::nan("")) + ",";
    out += std::to_string(report.seed) + "\n";
  }
  return out;
}

std::string estimate_json(const EstimateReport& report) {
  json doc;
  doc["n"] = report.n;
  doc["q"] = report.q;
  doc["family"] = report.family;
  doc["seed"] = report.seed;
  doc["fitted"] = report.fitted;
  doc["slope"] = report.fitted ? json(report.slope) : json();
  doc["residual"] = report.fitted ? json(report.residual) : json();
  json points = json::array();
  for (const ScalingPoint& p : report.points)
    points.push_back(
        {{"R", p.R}, {"lhs", p.lhs}, {"normalizer", p.normalizer}, {"ratio", p.ratio}});
  doc["points"] = std::move(points);
  return doc.dump(2) + "\n";
}

std::string chain_csv(const std::vector<std::pair<std::string, ChainReport>>& reports) {
  std::string out = "config,inequality,value,pass\n";
  const auto row = [&out](const std::string& config, const char* name, double value, bool pass) {
    out += config + "," + name + "," + format_double(value) + "," + (pass ? "pass" : "fail") + "\n";
  };
  for (const auto& [config, r] : reports) {
    row(config, "fubini_exact", r.fubini_exact ? 1.0 : 0.0, r.fubini_exact);
    row(config, "class_bounds_exact", r.class_bounds_exact ? 1.0 : 0.0, r.class_bounds_exact);
    row(config, "pigeonhole_ok", r.pigeonhole_ok ? 1.0 : 0.0, r.pigeonhole_ok);
    row(config, "combinatorial_ratio", r.combinatorial_ratio,
        std::isfinite(r.combinatorial_ratio));
    row(config, "nu_mult_ratio", r.nu_mult_ratio, std::isfinite(r.nu_mult_ratio));
    row(config, "t_b_ratio", r.t_b_ratio, std::isfinite(r.t_b_ratio));
    row(config, "combinatorial_unexcluded_ratio", r.combinatorial_unexcluded_ratio,
        std::isfinite(r.combinatorial_unexcluded_ratio));
    row(config, "nu_mult_unexcluded_ratio", r.nu_mult_unexcluded_ratio,
        std::isfinite(r.nu_mult_unexcluded_ratio));
  }
  return out;
}

// ---------------------------------------------------------------- plot data

std::vector<PlotRow> parse_estimate_csv(const std::string& text, const std::string& source) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines[0] != kEstimateHeader)
    throw InvalidConfig(source + ":1: schema mismatch: expected header '" +
                        std::string(kEstimateHeader) + "'");
  std::vector<PlotRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t lineno = i + 1;
    const std::vector<std::string> fields = split_csv(lines[i]);
    if (fields.size() != 10)
      throw InvalidConfig(source + ":" + std::to_string(lineno) + ": malformed CSV row: expected " +
                          "10 fields, got " + std::to_string(fields.size()));
    PlotRow row;
    row.experiment = fields[3];
    row.R = parse_field(fields[1], source, lineno, "R");
    row.q = parse_field(fields[2], source, lineno, "q");
    row.ratio = parse_field(fields[6], source, lineno, "ratio");
    row.slope = parse_field(fields[7], source, lineno, "slope");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string plotdata_csv(std::vector<PlotRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const PlotRow& a, const PlotRow& b) {
    if (a.experiment != b.experiment) return a.experiment < b.experiment;
    return a.R < b.R;
  });
  std::string out = "experiment,R,q,ratio,slope\n";
  for (const PlotRow& r : rows)
    out += r.experiment + "," + format_double(r.R) + "," + format_double(r.q) + "," +
           format_double(r.ratio) + "," + format_double(r.slope) + "\n";
  return out;
}

// ----------------------------------------------------------------- manifest

std::string manifest_json(const RunManifest& manifest) {
  json doc;
  doc["subcommand"] = manifest.subcommand;
  doc["config"] = manifest.config_path;
  doc["output_dir"] = manifest.output_dir;
  doc["timestamp"] = manifest.timestamp;
  doc["seed"] = manifest.seed;
  json versions;
  for (const char* module :
       {"geometry", "extension", "wavepacket", "combinatorics", "estimator", "io", "cli"})
    versions[module] = kVersion;
  doc["versions"] = std::move(versions);
  doc["outputs"] = manifest.outputs;
  return doc.dump(2) + "\n";
}

// ------------------------------------------------------------------- files

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw InvalidConfig(path + ": read failed");
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace parawave
