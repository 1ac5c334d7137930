#pragma once

// The sine-functional statistic for elliptical symmetry:
//
//   T = int_{S_p} int {sqrt(n) P_n sin[t a' V^{-1/2}(X - m)]}^2 w(t) dt dv(a)
//
// with the boxcar weight w = 1_{[-b,b]} / (2b) and v uniform on the sphere.
// With D+/D- the pairwise Mahalanobis distances it reduces to
//
//   T = (1/2n) sum_j { 1 - f(b D+_jj) + 2 sum_{i<j} [f(b D-_ij) - f(b D+_ij)] }
//
// where f(u) = E[sin(u U_1) / (u U_1)] for U uniform on S_p.

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ellipsym/estimators.hpp"
#include "ellipsym/linalg.hpp"
#include "ellipsym/rng.hpp"

namespace ellipsym {

/// f(u) by adaptive Gauss-Legendre quadrature of sinc(u v) against the
/// density of the first coordinate of a uniform point on S_p (absolute
/// tolerance 1e-9). Requires p >= 2.
double f_scalar(double u, int p);

/// Large-u expansion of f: (G - tail(u)) / u with G = int_0^inf E cos(s U_1) ds
/// and the tail from Hankel's expansion of the Bessel characteristic function.
/// Accurate to ~1e-12 for u >= 40.
double f_asymptotic(double u, int p);

/// Mean of sinc(u U_1) over `samples` uniform draws (Monte Carlo route).
double f_monte_carlo(double u, int p, long samples, Rng& rng);

enum class FMethod { Quadrature, MonteCarlo };

std::string_view to_string(FMethod method) noexcept;
FMethod parse_fmethod(std::string_view name);

inline constexpr double kDefaultTailStart = 64.0;

/// f tabulated at u_k = k * step for u in [0, u_max], linearly interpolated
/// between knots. Arguments at or above tail_start use f_asymptotic, so the
/// grid never has to reach the largest distances of heavy-tailed data.
class FTable {
 public:
  FTable(int p, double u_max, double step = 0.01, FMethod method = FMethod::Quadrature,
         long mc_samples = 0, std::uint64_t seed = 0, double tail_start = kDefaultTailStart);

  int p() const noexcept { return p_; }
  double step() const noexcept { return step_; }
  FMethod method() const noexcept { return method_; }
  long mc_samples() const noexcept { return mc_samples_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double tail_start() const noexcept { return tail_start_; }
  double u_max() const noexcept { return step_ * static_cast<double>(values_.size() - 1); }
  std::size_t size() const noexcept { return values_.size(); }
  double knot(std::size_t k) const noexcept { return step_ * static_cast<double>(k); }
  const std::vector<double>& values() const noexcept { return values_; }

  // True when every argument in [0, u] can be evaluated: the grid must reach
  // u or the start of the asymptotic tail, whichever comes first.
  bool covers(double u) const noexcept { return u_max() >= std::min(u, tail_start_); }

  /// f(u) for u >= 0; throws InvalidConfig if u is neither tabulated nor in
  /// the asymptotic range.
  double operator()(double u) const;

  /// Grows the grid to cover u (to 2u, capped at the asymptotic range).
  void extend_to(double u_required);

  /// Columnar text: two header lines, a "u,f" line, then one knot per line.
  void save(std::ostream& out) const;
  /// Throws VersionError on a malformed header or (when expected_p > 0) a
  /// dimension mismatch.
  static FTable load(std::istream& in, int expected_p = 0);

 private:
  FTable() = default;
  double knot_value(std::size_t k) const;
  void grow_to(double target);

  int p_ = 0;
  double step_ = 0.01;
  FMethod method_ = FMethod::Quadrature;
  long mc_samples_ = 0;
  std::uint64_t seed_ = 0;
  double tail_start_ = kDefaultTailStart;
  std::vector<double> values_;
};

/// FTable shared by concurrent statistic evaluations. Growth replaces the
/// table under a lock; readers keep the snapshot they were handed. Knot
/// values do not depend on growth history, so results are schedule-free.
class SharedFTable {
 public:
  explicit SharedFTable(FTable table);
  std::shared_ptr<const FTable> covering(double u_required);
  std::shared_ptr<const FTable> current() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const FTable> table_;
};

struct TestConfig {
  double b = 2.0;
  EstimatorKind estimator = EstimatorKind::DonohoStahel;
  EstimatorConfig estimator_config;
  int nboot = 1000;
  std::uint64_t seed = 0;
  double ftable_step = 0.01;
  double ftable_tail_start = kDefaultTailStart;
  FMethod ftable_method = FMethod::Quadrature;
  long ftable_mc_samples = 100000;
  int oracle_grid = 400;           // N_I
  int oracle_directions = 20000;   // M
  unsigned threads = 1;
  bool keep_replicates = true;

  void validate() const;
};

/// Largest argument b * D the closed form will query for these standardised
/// rows.
double max_kernel_argument(const Matrix& standardized, double b);

/// Closed form on already standardised rows z_i = V^{-1/2}(X_i - m). The
/// table must cover max_kernel_argument(z, b).
double statistic_from_standardized(const Matrix& standardized, double b, const FTable& ft);

/// Closed-form statistic; grows `ft` when the sample needs larger arguments.
double statistic_closed_form(const Sample& sample, const LocationScatter& est, double b,
                             FTable& ft);
double statistic_closed_form(const Sample& sample, const LocationScatter& est, double b,
                             SharedFTable& ft);

/// Direct approximation: midpoint grid of `grid_points` values of t on
/// [-b, b] times `directions` uniform random directions, averaging
/// {sqrt(n) P_n sin(t a'z)}^2.
double statistic_direct(const Sample& sample, const LocationScatter& est, double b,
                        int grid_points, int directions, std::uint64_t seed);

/// A table sized for the given sample: u_max = b * (max D + 10%).
FTable ftable_for(const Matrix& standardized, const TestConfig& cfg);

}  // namespace ellipsym
