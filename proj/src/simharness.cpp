#include "ellipsym/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "ellipsym/bootstrap.hpp"
#include "ellipsym/error.hpp"
#include "ellipsym/parallel.hpp"

namespace ellipsym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool estimator_failure(ErrorKind kind) {
  return kind == ErrorKind::NoConvergence || kind == ErrorKind::Singular ||
         kind == ErrorKind::DegenerateDirection || kind == ErrorKind::NotSpd;
}

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw Error(ErrorKind::Validation, field + ": " + message);
}

Sample draw_row(const std::string& id, int p, int n, Rng& rng) {
  if (id.rfind("H0_", 0) == 0) return sample_null(parse_null(id, p), n, rng);
  return sample_alternative(parse_alternative(id, p), n, rng);
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void SimulationSpec::validate() const {
  if (p < 1) invalid("p", "must be >= 1");
  try {
    parse_null(null_id, p);
  } catch (const Error& e) {
    invalid("null", e.what());
  }
  if (n <= p) invalid("n", "must exceed p");
  if (nr < 1) invalid("nr", "must be >= 1");
  if (nboot < 1) invalid("nboot", "must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) invalid("alpha", "must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) invalid("gamma", "must lie in (0, 1)");
  if (!(b > 0.0)) invalid("b", "must be > 0");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0) || !std::isfinite(deltas[i])) {
      invalid("alternatives[" + std::to_string(i) + "]", "delta must be finite and >= 0");
    }
  }
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    try {
      parse_alternative(fixed[i], p);
    } catch (const Error& e) {
      invalid("alternatives[" + std::to_string(deltas.size() + i) + "]", e.what());
    }
  }
  if (estimators.empty()) invalid("estimators", "at least one estimator is required");
  if (row_ids().empty()) invalid("alternatives", "no rows to run (include_null is false and no alternatives)");
  try {
    estimator_config.validate();
  } catch (const Error& e) {
    invalid("estimator_config", e.what());
  }
}

std::vector<std::string> SimulationSpec::row_ids() const {
  std::vector<std::string> rows;
  if (include_null) rows.push_back(null_id);
  const NullSpec base = parse_null(null_id, p);
  for (const double d : deltas) {
    AlternativeSpec alt;
    alt.p = p;
    alt.base = base;
    alt.delta = d;
    rows.push_back(alternative_name(alt));
  }
  for (const auto& f : fixed) rows.push_back(f);
  return rows;
}

const RejectionCell& RejectionTable::cell(const std::string& row, EstimatorKind est) const {
  for (const auto& c : cells) {
    if (c.row == row && c.estimator == est) return c;
  }
  throw Error(ErrorKind::InvalidConfig, "no cell (" + row + ", " + std::string(to_string(est)) + ")");
}

std::pair<double, double> significance_band(double alpha, int nr, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0) || nr < 1 || !(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "significance band needs alpha in (0,1), NR >= 1, gamma in (0,1]");
  }
  const double z = gamma >= 1.0 ? 0.0
                                : boost::math::quantile(boost::math::normal(), 1.0 - 0.5 * gamma);
  const double half = z * std::sqrt(alpha * (1.0 - alpha) / nr);
  return {alpha - half, alpha + half};
}

bool outside_band(double frequency, const std::pair<double, double>& band) {
  return frequency < band.first || frequency > band.second;
}

double size_corrected_rho(PowerPair a, PowerPair b) {
  const double da = a.h1 - a.h0;
  const double db = b.h1 - b.h0;
  if (db == 0.0) {
    throw Error(ErrorKind::DegenerateDenominator, "reference test has equal power and size");
  }
  return (da / db - 1.0) * 100.0;
}

RejectionTable rejection_experiment(const SimulationSpec& spec, const ProgressFn& progress) {
  spec.validate();
  RejectionTable table;
  table.spec = spec;
  table.band = significance_band(spec.alpha, spec.nr, spec.gamma);
  const auto rows = spec.row_ids();
  const std::size_t n_est = spec.estimators.size();
  const std::size_t n_cells = rows.size() * n_est;
  const auto nr = static_cast<std::size_t>(spec.nr);

  table.cells.resize(n_cells);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t e = 0; e < n_est; ++e) {
      auto& c = table.cells[r * n_est + e];
      c.row = rows[r];
      c.null_row = spec.include_null && r == 0;
      c.estimator = spec.estimators[e];
      c.p_values.assign(nr, kNaN);
      c.statistics.assign(nr, kNaN);
    }
  }
  std::vector<double> seconds(n_cells * nr, 0.0);

  SharedFTable ftable(FTable(spec.p, 16.0, 0.01));
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const std::size_t total = n_cells * nr;
  const std::size_t report_every = std::max<std::size_t>(1, total / 20);

  // Work items are (cell, replication) pairs so that slow robust cells
  // spread over all workers.
  parallel_for(total, spec.threads, [&](std::size_t item) {
    const std::size_t cell_index = item / nr;
    const std::size_t rep = item % nr;
    const std::size_t r = cell_index / n_est;
    const std::size_t e = cell_index % n_est;
    auto& c = table.cells[cell_index];

    Rng data_rng = make_stream(spec.seed, {r, rep, 0});
    const Sample x = draw_row(rows[r], spec.p, spec.n, data_rng);

    TestConfig cfg;
    cfg.b = spec.b;
    cfg.estimator = spec.estimators[e];
    cfg.estimator_config = spec.estimator_config;
    cfg.nboot = spec.nboot;
    cfg.seed = child_seed(spec.seed, {r, rep, 1 + e});
    cfg.threads = 1;
    cfg.keep_replicates = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      const TestResult res = bootstrap_pvalue(x, cfg, make_estimator(cfg.estimator, cfg.estimator_config),
                                              &ftable);
      c.p_values[rep] = res.p_value;
      c.statistics[rep] = res.statistic;
    } catch (const Error& err) {
      if (!estimator_failure(err.kind())) throw;
    }
    seconds[item] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::size_t finished = ++done;
    if (progress && (finished % report_every == 0 || finished == total)) {
      std::lock_guard lock(progress_mutex);
      progress(std::to_string(finished) + "/" + std::to_string(total) + " tests done");
    }
  });

  for (std::size_t k = 0; k < n_cells; ++k) {
    auto& c = table.cells[k];
    for (std::size_t rep = 0; rep < nr; ++rep) {
      c.wall_time_seconds += seconds[k * nr + rep];
      const double pv = c.p_values[rep];
      if (std::isnan(pv)) {
        ++c.failures;
        continue;
      }
      ++c.runs;
      if (pv <= spec.alpha) ++c.rejections;
    }
    c.valid = static_cast<double>(c.failures) <= 0.01 * spec.nr && c.runs > 0;
    if (c.runs > 0) {
      c.frequency = static_cast<double>(c.rejections) / c.runs;
      c.se = std::sqrt(c.frequency * (1.0 - c.frequency) / c.runs);
    }
    c.starred = c.null_row && c.runs > 0 && outside_band(c.frequency, table.band);
  }
  return table;
}

KdeCurve kde_density(const std::vector<double>& values, std::optional<double> bandwidth) {
  const std::size_t m = values.size();
  if (m < 2) throw Error(ErrorKind::InvalidConfig, "density estimate needs at least two values");
  for (const double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidConfig, "density estimate needs finite values");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw Error(ErrorKind::ZeroSpread, "all values are equal");

  double h = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw Error(ErrorKind::InvalidConfig, "bandwidth must be > 0");
    h = *bandwidth;
  } else {
    double mean = 0.0;
    for (const double v : sorted) mean += v;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (const double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    h = 1.06 * spread * std::pow(static_cast<double>(m), -0.2);
  }

  constexpr int kPoints = 512;
  KdeCurve curve;
  curve.bandwidth = h;
  curve.x.resize(kPoints);
  curve.density.resize(kPoints);
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double dx = (hi - lo) / (kPoints - 1);
  const double norm = 1.0 / (static_cast<double>(m) * h * std::sqrt(2.0 * std::numbers::pi));
  for (int k = 0; k < kPoints; ++k) {
    const double x = lo + k * dx;
    double acc = 0.0;
    for (const double v : sorted) {
      const double t = (x - v) / h;
      acc += std::exp(-0.5 * t * t);
    }
    curve.x[static_cast<std::size_t>(k)] = x;
    curve.density[static_cast<std::size_t>(k)] = acc * norm;
  }
  return curve;
}

std::vector<double> statistic_draws(const std::string& distribution, int p, int n, int reps,
                                    EstimatorKind estimator, const EstimatorConfig& cfg, double b,
                                    std::uint64_t seed, unsigned threads) {
  if (reps < 1) throw Error(ErrorKind::InvalidConfig, "reps must be >= 1");
  if (!(b > 0.0)) throw Error(ErrorKind::InvalidConfig, "b must be > 0");
  if (n <= p) throw Error(ErrorKind::InvalidConfig, "n must exceed p");
  SharedFTable ftable(FTable(p, 16.0, 0.01));
  std::vector<double> out(static_cast<std::size_t>(reps), kNaN);
  parallel_for(out.size(), threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, {r, 0});
    const Sample x = draw_row(distribution, p, n, rng);
    EstimatorConfig local = cfg;
    local.seed = child_seed(seed, {r, 1});
    try {
      const LocationScatter est = estimate(estimator, x, local);
      const Matrix z = standardize(x, est.mu, est.V);
      out[r] = statistic_from_standardized(z, b, *ftable.covering(max_kernel_argument(z, b)));
    } catch (const Error& err) {
      if (!estimator_failure(err.kind())) throw;
    }
  });
  return out;
}

}  // namespace ellipsym
