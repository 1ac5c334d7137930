#include "ellipsym/bootstrap.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "ellipsym/error.hpp"
#include "ellipsym/parallel.hpp"

namespace ellipsym {

namespace {

// Redraws allowed for a single replicate before the whole test fails.
constexpr int kMaxAttempts = 10;

// Stream layout under the master seed.
constexpr std::uint64_t kOriginalFit = 0;
constexpr std::uint64_t kResample = 1;
constexpr std::uint64_t kReplicateFit = 2;

bool recoverable(ErrorKind kind) {
  return kind == ErrorKind::NoConvergence || kind == ErrorKind::Singular ||
         kind == ErrorKind::DegenerateDirection || kind == ErrorKind::NotSpd;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

Sample bootstrap_sample(const Sample& sample, const LocationScatter& est, Rng& rng) {
  const Matrix z = standardize(sample, est.mu, est.V);
  const Eigen::Index p = sample.cols();
  Sample out(sample.rows(), p);
  for (Eigen::Index i = 0; i < sample.rows(); ++i) {
    out.row(i) = z.row(i).norm() * uniform_direction(p, rng).transpose();
  }
  return out;
}

ReplicateSummary summarize(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  return {values.front(),
          quantile_sorted(values, 0.05),
          quantile_sorted(values, 0.25),
          quantile_sorted(values, 0.5),
          quantile_sorted(values, 0.75),
          quantile_sorted(values, 0.95),
          values.back()};
}

TestResult bootstrap_pvalue(const Sample& sample, const TestConfig& cfg) {
  cfg.validate();
  return bootstrap_pvalue(sample, cfg, make_estimator(cfg.estimator, cfg.estimator_config));
}

TestResult bootstrap_pvalue(const Sample& sample, const TestConfig& cfg, const EstimatorFn& estimator,
                            SharedFTable* table) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = sample.rows();
  const Eigen::Index p = sample.cols();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "the test needs at least two observations");
  if (n <= p) throw Error(ErrorKind::Singular, "the test needs n > p");

  TestResult result;
  result.nboot = cfg.nboot;
  result.seed = cfg.seed;
  result.b = cfg.b;
  result.estimator = cfg.estimator;
  result.estimate = estimator(sample, child_seed(cfg.seed, {kOriginalFit}));

  const Matrix z = standardize(sample, result.estimate.mu, result.estimate.V);
  std::optional<SharedFTable> own;
  if (table == nullptr) {
    own.emplace(ftable_for(z, cfg));
    table = &*own;
  }
  result.statistic =
      statistic_from_standardized(z, cfg.b, *table->covering(max_kernel_argument(z, cfg.b)));

  const auto nboot = static_cast<std::size_t>(cfg.nboot);
  result.replicates.assign(nboot, 0.0);
  std::vector<int> failures(nboot, 0);
  parallel_for(nboot, cfg.threads, [&](std::size_t j) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const auto a = static_cast<std::uint64_t>(attempt);
      Rng rng = make_stream(cfg.seed, {kResample, j, a});
      const Sample star = bootstrap_sample(sample, result.estimate, rng);
      try {
        const LocationScatter fit = estimator(star, child_seed(cfg.seed, {kReplicateFit, j, a}));
        const Matrix zs = standardize(star, fit.mu, fit.V);
        const auto ft = table->covering(max_kernel_argument(zs, cfg.b));
        result.replicates[j] = statistic_from_standardized(zs, cfg.b, *ft);
        return;
      } catch (const Error& e) {
        if (!recoverable(e.kind())) throw;
        ++failures[j];
      }
    }
    throw Error(ErrorKind::NoConvergence,
                "bootstrap replicate " + std::to_string(j) + " failed " +
                    std::to_string(kMaxAttempts) + " times in a row");
  });

  for (const int f : failures) result.failed_fits += f;
  if (static_cast<double>(result.failed_fits) > 0.01 * static_cast<double>(cfg.nboot)) {
    throw Error(ErrorKind::NoConvergence,
                std::to_string(result.failed_fits) + " of " + std::to_string(cfg.nboot) +
                    " bootstrap refits failed (limit 1%)");
  }
  result.k = static_cast<int>(std::count_if(result.replicates.begin(), result.replicates.end(),
                                            [&](double t) { return t >= result.statistic; }));
  result.p_value = static_cast<double>(result.k) / static_cast<double>(cfg.nboot + 1);
  result.summary = summarize(result.replicates);
  if (!cfg.keep_replicates) result.replicates.clear();
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ellipsym
