#include "ellipsym/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ellipsym/bootstrap.hpp"
#include "ellipsym/error.hpp"
#include "ellipsym/io.hpp"
#include "ellipsym/simharness.hpp"

namespace ellipsym {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = slurp(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write '" + path + "'");
  return out;
}

struct TestOptions {
  std::string data;
  std::string config;
  std::string estimator = "ds";
  double b = 2.0;
  int nboot = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string ftable;
  bool replicates = false;
  bool timing = false;
};

struct SimulateOptions {
  std::string experiment;
  std::string out = "experiment";
  std::string statistics;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool timing = false;
  bool quiet = false;
};

struct FTableOptions {
  int p = 2;
  double u_max = 64.0;
  double step = 0.01;
  std::string method = "quadrature";
  long mc_samples = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

struct KdeOptions {
  std::string values;
  std::string out;
  int column = 1;
  std::optional<double> bandwidth;
  std::uint64_t seed = 0;
};

int cmd_test(const TestOptions& o, const CLI::App& sub, std::ostream& out) {
  TestConfig cfg;
  cfg.nboot = 1000;
  double alpha = 0.05;
  if (!o.config.empty()) apply_test_config(read_json_file(o.config), cfg, alpha);
  // Explicit flags override the config file.
  if (sub.count("--estimator")) cfg.estimator = parse_estimator_kind(o.estimator);
  if (sub.count("--b")) cfg.b = o.b;
  if (sub.count("--nboot")) cfg.nboot = o.nboot;
  if (sub.count("--alpha")) alpha = o.alpha;
  if (sub.count("--seed")) cfg.seed = o.seed;
  if (sub.count("--threads")) cfg.threads = o.threads;
  cfg.keep_replicates = o.replicates;
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
  cfg.validate();

  const std::string bytes = slurp(o.data);
  std::istringstream in(bytes);
  const Sample x = read_csv(in);
  if (x.rows() <= x.cols()) {
    throw Error(ErrorKind::TooFewRows, "need more rows than columns (got " + std::to_string(x.rows()) +
                                           " x " + std::to_string(x.cols()) + ")");
  }

  TestResult result;
  const EstimatorFn fn = make_estimator(cfg.estimator, cfg.estimator_config);
  if (!o.ftable.empty()) {
    std::ifstream tin(o.ftable);
    if (!tin) throw Error(ErrorKind::ParseError, "cannot open '" + o.ftable + "'");
    FTable table = FTable::load(tin, static_cast<int>(x.cols()));
    if (table.step() != cfg.ftable_step || table.method() != cfg.ftable_method) {
      throw Error(ErrorKind::VersionError, "cached f-table was built with different settings");
    }
    SharedFTable shared(std::move(table));
    result = bootstrap_pvalue(x, cfg, fn, &shared);
  } else {
    result = bootstrap_pvalue(x, cfg, fn);
  }
  out << test_report_json(result, cfg, fnv1a_hex(bytes), alpha, o.replicates, o.timing).dump(2) << '\n';
  return 0;
}

int cmd_simulate(const SimulateOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  SimulationSpec spec = simulation_spec_from_json(read_json_file(o.experiment));
  if (sub.count("--seed")) spec.seed = o.seed;
  if (sub.count("--threads")) spec.threads = o.threads;
  ProgressFn progress;
  if (!o.quiet) progress = [&err](const std::string& msg) { err << msg << '\n'; };
  const RejectionTable table = rejection_experiment(spec, progress);

  {
    auto csv = open_output(o.out + ".csv");
    write_rejection_csv(table, csv);
  }
  {
    auto json = open_output(o.out + ".json");
    json << rejection_table_json(table, o.timing).dump(2) << '\n';
  }
  if (!o.statistics.empty()) {
    auto stats = open_output(o.statistics);
    stats << "row,estimator,rep,statistic,p_value\n";
    for (const auto& c : table.cells) {
      for (std::size_t r = 0; r < c.statistics.size(); ++r) {
        stats << c.row << ',' << to_string(c.estimator) << ',' << r << ','
              << format_real(c.statistics[r]) << ',' << format_real(c.p_values[r]) << '\n';
      }
    }
  }
  write_rejection_csv(table, out);
  return 0;
}

int cmd_ftable(const FTableOptions& o, std::ostream& out) {
  const FTable table(o.p, o.u_max, o.step, parse_fmethod(o.method), o.mc_samples, o.seed);
  if (o.out.empty() || o.out == "-") {
    table.save(out);
  } else {
    auto file = open_output(o.out);
    table.save(file);
  }
  return 0;
}

int cmd_kde(const KdeOptions& o, std::ostream& out) {
  const Sample data = read_csv_file(o.values);
  if (o.column < 1 || o.column > data.cols()) {
    throw Error(ErrorKind::InvalidConfig, "column " + std::to_string(o.column) + " out of range");
  }
  const auto col = data.col(o.column - 1);
  const std::vector<double> values(col.data(), col.data() + col.size());
  const KdeCurve curve = kde_density(values, o.bandwidth);
  if (o.out.empty() || o.out == "-") {
    write_kde_csv(curve, out);
  } else {
    auto file = open_output(o.out);
    write_kde_csv(curve, file);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bootstrap test for elliptical symmetry with robust plug-in estimators", "ellipsym"};
  app.require_subcommand(1);

  TestOptions test;
  auto* t = app.add_subcommand("test", "Run the test on a CSV sample and print a JSON report");
  t->add_option("data", test.data, "CSV file, one observation per row")->required();
  t->add_option("--config", test.config, "JSON file with test settings");
  t->add_option("--estimator", test.estimator, "cl, s or ds")->capture_default_str();
  t->add_option("--b", test.b, "weight half-width")->capture_default_str();
  t->add_option("--nboot", test.nboot, "bootstrap samples")->capture_default_str();
  t->add_option("--alpha", test.alpha, "level for the verdict")->capture_default_str();
  t->add_option("--seed", test.seed, "master seed")->capture_default_str();
  t->add_option("--threads", test.threads, "worker threads")->envname("ELLIPSYM_THREADS");
  t->add_option("--ftable", test.ftable, "cached f-table from `ellipsym ftable`");
  t->add_flag("--replicates", test.replicates, "include every replicate statistic");
  t->add_flag("--timing", test.timing, "include wall time");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Run a rejection-frequency experiment");
  s->add_option("experiment", sim.experiment, "JSON experiment file")->required();
  s->add_option("--out", sim.out, "output prefix for <prefix>.csv and <prefix>.json")->capture_default_str();
  s->add_option("--statistics", sim.statistics, "also write per-replication statistics to this CSV");
  s->add_option("--seed", sim.seed, "override the experiment seed");
  s->add_option("--threads", sim.threads, "worker threads")->envname("ELLIPSYM_THREADS");
  s->add_flag("--timing", sim.timing, "include per-cell wall time in the JSON sidecar");
  s->add_flag("--quiet", sim.quiet, "no progress on stderr");

  FTableOptions ft;
  auto* f = app.add_subcommand("ftable", "Tabulate f(u) for one dimension");
  f->add_option("--p", ft.p, "dimension")->required();
  f->add_option("--u-max", ft.u_max, "largest tabulated argument")->capture_default_str();
  f->add_option("--step", ft.step, "grid step")->capture_default_str();
  f->add_option("--method", ft.method, "quadrature or montecarlo")->capture_default_str();
  f->add_option("--mc-samples", ft.mc_samples, "draws per knot for montecarlo")->capture_default_str();
  f->add_option("--seed", ft.seed, "seed for montecarlo knots")->capture_default_str();
  f->add_option("--out", ft.out, "output file (default stdout)");

  KdeOptions kde;
  auto* k = app.add_subcommand("kde", "Gaussian kernel density of a column of values");
  k->add_option("values", kde.values, "CSV file of values")->required();
  k->add_option("--out", kde.out, "output file (default stdout)");
  k->add_option("--column", kde.column, "1-based column")->capture_default_str();
  k->add_option("--bandwidth", kde.bandwidth, "kernel bandwidth (default: Silverman)");
  k->add_option("--seed", kde.seed, "accepted for uniformity; the estimate is deterministic");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*t) return cmd_test(test, *t, out);
    if (*s) return cmd_simulate(sim, *s, out, err);
    if (*f) return cmd_ftable(ft, out);
    if (*k) return cmd_kde(kde, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace ellipsym
