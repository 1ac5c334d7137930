#pragma once

// Seeded samplers for the null (elliptical) and alternative distributions of
// the simulation study. Every sampler is a pure function of its arguments
// and the state of the supplied stream.

#include <optional>
#include <string>
#include <string_view>

#include "ellipsym/linalg.hpp"
#include "ellipsym/rng.hpp"

namespace ellipsym {

enum class NullId { Normal, Mix90N10Cauchy, Mix90N10T3, T3, UnifSphere, UnifBall, Cauchy, Pearson2, T5 };

struct NullSpec {
  NullId id = NullId::Normal;
  int p = 2;
};

/// Stable identifiers: "H0_1".."H0_7" for p = 2, "H0_1".."H0_4" for p = 5.
NullSpec parse_null(std::string_view name, int p);
std::string null_name(const NullSpec& spec);

enum class FixedAlternative { Star1, Star2, Star3, Star4 };

struct AlternativeSpec {
  int p = 2;
  NullSpec base;                          // shift alternatives
  double delta = 0.0;                     // X = Z + delta * Y
  std::optional<FixedAlternative> fixed;  // set for H1_star_j
};

/// "H1_delta:H0_j:D", "H1_star_j", or a bare null id (delta = 0).
AlternativeSpec parse_alternative(std::string_view name, int p);
std::string alternative_name(const AlternativeSpec& spec);

Sample sample_normal(int p, Eigen::Index n, Rng& rng);
/// Rows uniform on the unit sphere (normalised Gaussian vectors).
Sample sample_uniform_sphere(int p, Eigen::Index n, Rng& rng);
/// Rows uniform in the unit ball: uniform direction, radius U^{1/p}.
Sample sample_uniform_ball(int p, Eigen::Index n, Rng& rng);
/// Multivariate t with k degrees of freedom: W sqrt(k / chi^2_k).
Sample sample_mvt(int p, double k, Eigen::Index n, Rng& rng);
/// Pearson type II: sqrt(V) U with V ~ Be(p/2, m), U uniform on the sphere.
Sample sample_pearson2(int p, double m, Eigen::Index n, Rng& rng);
/// (1 - eps) N(0, I) + eps T_{p,k}; membership drawn before the vector.
Sample sample_contaminated_normal(int p, double eps, double k, Eigen::Index n, Rng& rng);

Sample sample_null(const NullSpec& spec, Eigen::Index n, Rng& rng);
/// Throws UnknownAlternative for fixed alternatives outside p in {2, 5}.
Sample sample_alternative(const AlternativeSpec& spec, Eigen::Index n, Rng& rng);

}  // namespace ellipsym
