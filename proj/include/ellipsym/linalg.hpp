#pragma once

// Dense symmetric linear algebra and Mahalanobis geometry.

#include <Eigen/Dense>

namespace ellipsym {

// n x p observation matrix, one observation per row.
using Sample = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Smallest admissible eigenvalue of an SPD matrix, relative to its trace.
inline constexpr double kSpdRelativeTolerance = 1e-12;

/// Symmetric positive definite matrix. Symmetry (1e-12 relative) and
/// positivity of the spectrum are checked on construction; NotSPD otherwise.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);

  /// Identity of dimension p.
  static SpdMatrix identity(Eigen::Index p);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Symmetric inverse square root A, with A * M * A = I.
SpdMatrix sym_inv_sqrt(const SpdMatrix& m);

/// (x - v)^T S^{-1} (x - v).
double mahalanobis_sq(const Vector& x, const Vector& v, const SpdMatrix& s);

/// Rows V^{-1/2} (X_i - m): the sample in the coordinates where the
/// scatter is the identity.
Matrix standardize(const Sample& sample, const Vector& center, const SpdMatrix& scatter);

struct PairwiseDistances {
  Matrix minus;  // d(X_i - m, X_j - m, V)
  Matrix plus;   // d(X_i - m, -(X_j - m), V)
};

/// Mahalanobis distances between centred observations (minus) and between
/// a centred observation and the reflection of another (plus).
PairwiseDistances pairwise_distances(const Sample& sample, const Vector& center,
                                     const SpdMatrix& scatter);

}  // namespace ellipsym
