#pragma once

// Monte Carlo driver for level/power studies: rejection frequencies with
// binomial standard errors, significance-band flags, size-corrected relative
// power and kernel density curves of the statistic.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ellipsym/distributions.hpp"
#include "ellipsym/estimators.hpp"
#include "ellipsym/teststat.hpp"

namespace ellipsym {

struct SimulationSpec {
  std::string null_id = "H0_1";
  int p = 2;
  int n = 200;
  int nr = 200;     // replications per cell
  int nboot = 500;  // bootstrap samples per test
  double alpha = 0.05;
  double gamma = 0.01;
  double b = 2.0;
  std::vector<double> deltas;              // shift alternatives of the null
  std::vector<std::string> fixed;          // e.g. "H1_star_1"
  bool include_null = true;                // the delta = 0 row
  std::vector<EstimatorKind> estimators{EstimatorKind::Classical};
  EstimatorConfig estimator_config;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Throws Validation naming the offending field.
  void validate() const;
  /// Row identifiers in table order.
  std::vector<std::string> row_ids() const;
};

struct RejectionCell {
  std::string row;  // alternative id; the null id for the delta = 0 row
  bool null_row = false;
  EstimatorKind estimator = EstimatorKind::Classical;
  int runs = 0;        // successful replications
  int failures = 0;    // replications whose test raised an estimator error
  int rejections = 0;  // p <= alpha
  double frequency = 0.0;
  double se = 0.0;
  bool starred = false;  // null rows only: frequency outside the band
  bool valid = true;     // failures <= 1% of NR
  double wall_time_seconds = 0.0;
  std::vector<double> p_values;    // by replication; NaN for failures
  std::vector<double> statistics;  // by replication; NaN for failures
};

struct RejectionTable {
  SimulationSpec spec;
  std::pair<double, double> band;
  std::vector<RejectionCell> cells;  // row-major: rows x estimators

  const RejectionCell& cell(const std::string& row, EstimatorKind est) const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Every (row, replication) draws its data from child(seed, row, rep, 0);
/// estimator e tests it with seed child(seed, row, rep, 1 + e), so all
/// estimators see the same datasets.
RejectionTable rejection_experiment(const SimulationSpec& spec, const ProgressFn& progress = {});

/// a_j = alpha -/+ z_{gamma/2} sqrt(alpha (1 - alpha) / NR).
std::pair<double, double> significance_band(double alpha, int nr, double gamma);
bool outside_band(double frequency, const std::pair<double, double>& band);

struct PowerPair {
  double h1;  // rejection frequency under the alternative
  double h0;  // rejection frequency under the null
};

/// rho = (D_A / D_B - 1) * 100 with D = pi_H1 - pi_H0.
double size_corrected_rho(PowerPair a, PowerPair b);

struct KdeCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian kernel density on 512 points over [min - 3h, max + 3h].
/// Default h: 1.06 min(sd, IQR / 1.34) m^{-1/5}.
KdeCurve kde_density(const std::vector<double>& values, std::optional<double> bandwidth = std::nullopt);

/// Observed statistics (no bootstrap) for `reps` samples from a null or
/// alternative id; the raw material of density plots.
std::vector<double> statistic_draws(const std::string& distribution, int p, int n, int reps,
                                    EstimatorKind estimator, const EstimatorConfig& cfg, double b,
                                    std::uint64_t seed, unsigned threads = 1);

}  // namespace ellipsym
