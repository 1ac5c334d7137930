#include "ellipsym/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ellipsym/error.hpp"

namespace ellipsym {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view field, double& value) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  return res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(value);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::Validation, path + ": " + message);
}

template <typename T>
T get_number(const nlohmann::json& v, const std::string& path) {
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) invalid(path, "expected a number");
    return v.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) {
      if (!v.is_number_integer() || v.get<long long>() < 0) invalid(path, "expected a non-negative integer");
    }
    return v.get<T>();
  } else {
    if (!v.is_number_integer()) invalid(path, "expected an integer");
    return v.get<T>();
  }
}

std::string get_string(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const nlohmann::json& v, const std::string& path) {
  if (!v.is_boolean()) invalid(path, "expected true or false");
  return v.get<bool>();
}

// Estimator tuning keys shared by test configs and experiment files.
bool apply_estimator_key(const std::string& key, const nlohmann::json& v, const std::string& path,
                         EstimatorConfig& cfg) {
  if (key == "bdp") cfg.bdp = get_number<double>(v, path);
  else if (key == "tukey_c") cfg.tukey_c = get_number<double>(v, path);
  else if (key == "n_directions") cfg.n_directions = get_number<int>(v, path);
  else if (key == "n_subsets") cfg.n_subsets = get_number<int>(v, path);
  else if (key == "n_best") cfg.n_best = get_number<int>(v, path);
  else if (key == "max_iter") cfg.max_iter = get_number<int>(v, path);
  else if (key == "tol") cfg.tol = get_number<double>(v, path);
  else return false;
  return true;
}

void estimator_config_json(const EstimatorConfig& cfg, nlohmann::ordered_json& out) {
  out["bdp"] = cfg.bdp;
  if (cfg.tukey_c) out["tukey_c"] = *cfg.tukey_c;
  out["n_directions"] = cfg.n_directions;
  out["n_subsets"] = cfg.n_subsets;
  out["n_best"] = cfg.n_best;
  out["max_iter"] = cfg.max_iter;
  out["tol"] = cfg.tol;
}

EstimatorKind get_estimator(const nlohmann::json& v, const std::string& path) {
  const std::string name = get_string(v, path);
  try {
    return parse_estimator_kind(name);
  } catch (const Error& e) {
    invalid(path, e.what());
  }
}

}  // namespace

Sample read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  bool first_content = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_commas(body);
    std::vector<double> row(fields.size());
    std::size_t bad = fields.size();
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_number(fields[j], row[j])) {
        bad = j;
        break;
      }
    }
    if (first_content) {
      first_content = false;
      width = fields.size();
      if (bad != fields.size()) continue;  // header row
    }
    if (fields.size() != width) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(width) + " fields, found " +
                                             std::to_string(fields.size()));
    }
    if (bad != fields.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", field " +
                                             std::to_string(bad + 1) + ": '" +
                                             std::string(trim(fields[bad])) + "' is not a number");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::TooFewRows, "no data rows");
  Sample out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

Sample read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  return read_csv(in);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json test_report_json(const TestResult& result, const TestConfig& cfg,
                                        const std::string& input_digest, double alpha,
                                        bool include_replicates, bool include_timing) {
  nlohmann::ordered_json doc;
  doc["input_digest"] = input_digest;
  nlohmann::ordered_json config;
  config["estimator"] = std::string(to_string(cfg.estimator));
  config["b"] = cfg.b;
  config["nboot"] = cfg.nboot;
  config["seed"] = cfg.seed;
  config["alpha"] = alpha;
  config["ftable_step"] = cfg.ftable_step;
  config["ftable_tail_start"] = cfg.ftable_tail_start;
  config["ftable_method"] = std::string(to_string(cfg.ftable_method));
  if (cfg.ftable_method == FMethod::MonteCarlo) config["ftable_mc_samples"] = cfg.ftable_mc_samples;
  estimator_config_json(cfg.estimator_config, config);
  doc["config"] = config;
  doc["statistic"] = result.statistic;
  doc["p_value"] = result.p_value;
  doc["k"] = result.k;
  doc["nboot"] = result.nboot;
  doc["seed"] = result.seed;
  doc["estimator"] = std::string(to_string(result.estimator));
  nlohmann::ordered_json est;
  est["mu"] = std::vector<double>(result.estimate.mu.data(), result.estimate.mu.data() + result.estimate.mu.size());
  nlohmann::ordered_json v = nlohmann::ordered_json::array();
  const Matrix& m = result.estimate.V.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    v.push_back(row);
  }
  est["V"] = v;
  est["iterations"] = result.estimate.iterations;
  doc["estimate"] = est;
  const auto& s = result.summary;
  doc["replicate_summary"] = {{"min", s.min},       {"q05", s.q05}, {"q25", s.q25},
                              {"median", s.median}, {"q75", s.q75}, {"q95", s.q95},
                              {"max", s.max}};
  doc["failed_fits"] = result.failed_fits;
  doc["verdict"] = result.p_value <= alpha ? "reject" : "do not reject";
  if (include_replicates) doc["replicates"] = result.replicates;
  if (include_timing) doc["wall_time_seconds"] = result.wall_time_seconds;
  return doc;
}

void apply_test_config(const nlohmann::json& doc, TestConfig& cfg, double& alpha) {
  if (!doc.is_object()) invalid("/", "expected a JSON object");
  for (const auto& [key, v] : doc.items()) {
    const std::string path = "/" + key;
    if (key == "estimator") cfg.estimator = get_estimator(v, path);
    else if (key == "b") cfg.b = get_number<double>(v, path);
    else if (key == "nboot") cfg.nboot = get_number<int>(v, path);
    else if (key == "seed") cfg.seed = get_number<std::uint64_t>(v, path);
    else if (key == "alpha") alpha = get_number<double>(v, path);
    else if (key == "threads") cfg.threads = get_number<unsigned>(v, path);
    else if (key == "ftable_step") cfg.ftable_step = get_number<double>(v, path);
    else if (key == "ftable_tail_start") cfg.ftable_tail_start = get_number<double>(v, path);
    else if (key == "ftable_method") {
      try {
        cfg.ftable_method = parse_fmethod(get_string(v, path));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Validation) throw;
        invalid(path, e.what());
      }
    } else if (key == "ftable_mc_samples") cfg.ftable_mc_samples = get_number<long>(v, path);
    else if (key == "keep_replicates") cfg.keep_replicates = get_bool(v, path);
    else if (!apply_estimator_key(key, v, path, cfg.estimator_config)) invalid(path, "unknown field");
  }
}

SimulationSpec simulation_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) invalid("/", "expected a JSON object");
  SimulationSpec spec;
  bool have_null = false;
  for (const auto& [key, v] : doc.items()) {
    const std::string path = "/" + key;
    if (key == "null") {
      spec.null_id = get_string(v, path);
      have_null = true;
    } else if (key == "p") spec.p = get_number<int>(v, path);
    else if (key == "n") spec.n = get_number<int>(v, path);
    else if (key == "nr") spec.nr = get_number<int>(v, path);
    else if (key == "nboot") spec.nboot = get_number<int>(v, path);
    else if (key == "alpha") spec.alpha = get_number<double>(v, path);
    else if (key == "gamma") spec.gamma = get_number<double>(v, path);
    else if (key == "b") spec.b = get_number<double>(v, path);
    else if (key == "seed") spec.seed = get_number<std::uint64_t>(v, path);
    else if (key == "threads") spec.threads = get_number<unsigned>(v, path);
    else if (key == "include_null") spec.include_null = get_bool(v, path);
    else if (key == "alternatives") {
      if (!v.is_array()) invalid(path, "expected an array of deltas and alternative ids");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string item = path + "/" + std::to_string(i);
        if (v[i].is_number()) {
          spec.deltas.push_back(get_number<double>(v[i], item));
        } else if (v[i].is_string()) {
          spec.fixed.push_back(v[i].get<std::string>());
        } else {
          invalid(item, "expected a delta or an alternative id");
        }
      }
    } else if (key == "estimators") {
      if (!v.is_array()) invalid(path, "expected an array of estimator names");
      spec.estimators.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        spec.estimators.push_back(get_estimator(v[i], path + "/" + std::to_string(i)));
      }
    } else if (!apply_estimator_key(key, v, path, spec.estimator_config)) {
      invalid(path, "unknown field");
    }
  }
  if (!have_null) invalid("/null", "required field missing");
  // Report semantic problems with JSON paths.
  try {
    parse_null(spec.null_id, spec.p);
  } catch (const Error& e) {
    invalid("/null", e.what());
  }
  for (std::size_t i = 0; i < spec.fixed.size(); ++i) {
    try {
      parse_alternative(spec.fixed[i], spec.p);
    } catch (const Error& e) {
      invalid("/alternatives/" + std::to_string(spec.deltas.size() + i), e.what());
    }
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    const std::string msg = e.what();
    const std::string prefix = std::string(to_string(ErrorKind::Validation)) + ": ";
    throw Error(ErrorKind::Validation, "/" + (msg.rfind(prefix, 0) == 0 ? msg.substr(prefix.size()) : msg));
  }
  return spec;
}

nlohmann::ordered_json simulation_spec_to_json(const SimulationSpec& spec) {
  nlohmann::ordered_json doc;
  doc["null"] = spec.null_id;
  doc["p"] = spec.p;
  doc["n"] = spec.n;
  doc["nr"] = spec.nr;
  doc["nboot"] = spec.nboot;
  doc["alpha"] = spec.alpha;
  doc["gamma"] = spec.gamma;
  doc["b"] = spec.b;
  nlohmann::ordered_json alts = nlohmann::ordered_json::array();
  for (const double d : spec.deltas) alts.push_back(d);
  for (const auto& f : spec.fixed) alts.push_back(f);
  doc["alternatives"] = alts;
  doc["include_null"] = spec.include_null;
  nlohmann::ordered_json ests = nlohmann::ordered_json::array();
  for (const auto e : spec.estimators) ests.push_back(std::string(to_string(e)));
  doc["estimators"] = ests;
  doc["seed"] = spec.seed;
  estimator_config_json(spec.estimator_config, doc);
  return doc;
}

void write_rejection_csv(const RejectionTable& table, std::ostream& out) {
  out << "null,alternative,estimator,freq,se,starred,valid\n";
  for (const auto& c : table.cells) {
    out << table.spec.null_id << ',' << (c.null_row ? std::string("none") : c.row) << ','
        << to_string(c.estimator) << ',' << format_real(c.frequency) << ',' << format_real(c.se)
        << ',' << (c.starred ? "true" : "false") << ',' << (c.valid ? "true" : "false") << '\n';
  }
}

nlohmann::ordered_json rejection_table_json(const RejectionTable& table, bool include_timing) {
  nlohmann::ordered_json doc;
  doc["spec"] = simulation_spec_to_json(table.spec);
  doc["band"] = {table.band.first, table.band.second};
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : table.cells) {
    nlohmann::ordered_json cell;
    cell["row"] = c.row;
    cell["null_row"] = c.null_row;
    cell["estimator"] = std::string(to_string(c.estimator));
    cell["runs"] = c.runs;
    cell["failures"] = c.failures;
    cell["rejections"] = c.rejections;
    cell["frequency"] = c.frequency;
    cell["se"] = c.se;
    cell["starred"] = c.starred;
    cell["valid"] = c.valid;
    cell["p_values"] = c.p_values;
    if (include_timing) cell["wall_time_seconds"] = c.wall_time_seconds;
    cells.push_back(cell);
  }
  doc["cells"] = cells;
  return doc;
}

void write_kde_csv(const KdeCurve& curve, std::ostream& out) {
  out << "x,density\n";
  for (std::size_t k = 0; k < curve.x.size(); ++k) {
    out << format_real(curve.x[k]) << ',' << format_real(curve.density[k]) << '\n';
  }
}

}  // namespace ellipsym
