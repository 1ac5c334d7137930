#pragma once

// Affine-equivariant location/scatter estimators: the sample mean and
// covariance, S-estimators with Tukey's biweight, and a Donoho-Stahel
// projection estimator. Randomised steps are driven by EstimatorConfig::seed
// and act on a canonical row order, so results are bit-reproducible and do
// not depend on the order of the input rows.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ellipsym/linalg.hpp"

namespace ellipsym {

enum class EstimatorKind { Classical, SEstimator, DonohoStahel };

std::string_view to_string(EstimatorKind kind) noexcept;
/// Accepts the short CLI names "cl", "s", "ds" and the long names.
EstimatorKind parse_estimator_kind(std::string_view name);

struct LocationScatter {
  Vector mu;
  SpdMatrix V;
  EstimatorKind kind = EstimatorKind::Classical;
  int iterations = 0;
  bool converged = true;
};

struct EstimatorConfig {
  double bdp = 0.5;
  std::optional<double> tukey_c;  // calibrated from bdp when empty
  int n_directions = 0;           // Donoho-Stahel; 0 selects max(1000, 250 p)
  int n_subsets = 500;            // S-estimator elemental starts
  int n_best = 5;                 // S-estimator starts refined to convergence
  int max_iter = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sample mean and covariance with the 1/n divisor.
LocationScatter classical_estimate(const Sample& sample);

struct TukeyValues {
  double rho;
  double psi;
  double psi_prime;
  double u;  // psi(y) / y, with u(0) = 1
};

/// Tukey biweight rho(y) = (c^2/6) min{1 - [1 - (y/c)^2]^3, 1} and its
/// derivative psi, psi' and weight u = psi/y.
TukeyValues tukey_functions(double y, double c) noexcept;
double tukey_rho(double y, double c) noexcept;

/// E[rho_c(R)] for R^2 ~ chi^2_p, in closed form via chi-square CDFs.
double tukey_expected_rho(int p, double c);

/// Tuning constant c with E_{chi_p}[rho_c] = bdp * c^2 / 6 (bisection).
double tukey_c_for_bdp(int p, double bdp);

/// M-scale s with mean(rho_c(d_i / s)) = b. Distances must be non-negative.
double m_scale(std::span<const double> distances, double c, double b, double tol = 1e-12,
               int max_iter = 500);

LocationScatter s_estimate(const Sample& sample, const EstimatorConfig& cfg);

/// Donoho-Stahel outlyingness of every row: the largest standardised
/// deviation |a'x - med(a'X)| / (1.4826 MAD(a'X)) over the direction set.
std::vector<double> ds_outlyingness(const Sample& sample, const EstimatorConfig& cfg);

LocationScatter ds_estimate(const Sample& sample, const EstimatorConfig& cfg);

/// Diagnostic weights (0/1) used by ds_estimate, exposed for testing.
std::vector<double> ds_weights(const Sample& sample, const EstimatorConfig& cfg);

struct MonteCarloEstimate {
  double value;
  double std_error;
};

/// beta = E[(1 - 1/p) u(|Z|) + (1/p) psi'(|Z|)] for Z ~ N(0, I_p), by
/// Monte Carlo.
MonteCarloEstimate beta_constant(int p, double c, long samples, std::uint64_t seed);

/// Dispatch on kind.
LocationScatter estimate(EstimatorKind kind, const Sample& sample, const EstimatorConfig& cfg);

/// Any location/scatter rule; the seed is the only source of randomness it
/// may use.
using EstimatorFn = std::function<LocationScatter(const Sample&, std::uint64_t seed)>;

EstimatorFn make_estimator(EstimatorKind kind, EstimatorConfig cfg);

/// Row permutation sorting observations by classical Mahalanobis distance
/// (ties broken lexicographically). Invariant under affine maps and under
/// permutations of the input rows.
std::vector<Eigen::Index> canonical_order(const Sample& sample);

}  // namespace ellipsym
