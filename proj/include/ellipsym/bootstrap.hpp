#pragma once

// Conditional bootstrap: resamples keep the observed Mahalanobis radii and
// draw fresh uniform directions, the estimator is refitted on every
// resample, and the p-value is the share of replicate statistics at least
// as large as the observed one.

#include <cstdint>
#include <optional>
#include <vector>

#include "ellipsym/estimators.hpp"
#include "ellipsym/rng.hpp"
#include "ellipsym/teststat.hpp"

namespace ellipsym {

struct ReplicateSummary {
  double min = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
};

struct TestResult {
  double statistic = 0.0;
  std::vector<double> replicates;  // in replicate-index order; empty unless kept
  ReplicateSummary summary;
  int k = 0;                       // #{j : T*_j >= T}
  double p_value = 0.0;            // k / (nboot + 1)
  int nboot = 0;
  std::uint64_t seed = 0;
  double b = 0.0;
  EstimatorKind estimator = EstimatorKind::Classical;
  LocationScatter estimate{Vector(), SpdMatrix::identity(1)};
  int failed_fits = 0;  // replicate fits that had to be redrawn
  double wall_time_seconds = 0.0;
};

/// X*_i = |V^{-1/2}(X_i - m)| u_i with u_i uniform on the sphere.
Sample bootstrap_sample(const Sample& sample, const LocationScatter& est, Rng& rng);

/// Full test with the estimator named in cfg. Deterministic in cfg.seed and
/// independent of cfg.threads.
TestResult bootstrap_pvalue(const Sample& sample, const TestConfig& cfg);

/// Same with an arbitrary estimator and optionally a caller-owned f-table
/// (shared across many tests of the same dimension).
TestResult bootstrap_pvalue(const Sample& sample, const TestConfig& cfg, const EstimatorFn& estimator,
                            SharedFTable* table = nullptr);

/// Type-7 quantiles of the replicate list.
ReplicateSummary summarize(std::vector<double> values);

}  // namespace ellipsym
