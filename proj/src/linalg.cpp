#include "ellipsym/linalg.hpp"

#include <cmath>
#include <string>

#include "ellipsym/error.hpp"

namespace ellipsym {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> checked_eigen(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::NotSpd, "eigendecomposition failed");
  }
  const double trace = m.trace();
  const double floor = kSpdRelativeTolerance * std::abs(trace);
  if (!(trace > 0.0) || !(eig.eigenvalues().minCoeff() > floor)) {
    throw Error(ErrorKind::NotSpd, "smallest eigenvalue " +
                                       std::to_string(eig.eigenvalues().minCoeff()) +
                                       " not above " + std::to_string(floor));
  }
  return eig;
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw Error(ErrorKind::NotSpd, "matrix must be square and non-empty");
  }
  if (!m_.allFinite()) {
    throw Error(ErrorKind::NotSpd, "matrix has non-finite entries");
  }
  const double scale = m_.cwiseAbs().maxCoeff();
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw Error(ErrorKind::NotSpd, "matrix is not symmetric");
  }
  // Store the exactly symmetric part so downstream solvers see a clean input.
  m_ = 0.5 * (m_ + m_.transpose()).eval();
  checked_eigen(m_);
}

SpdMatrix SpdMatrix::identity(Eigen::Index p) { return SpdMatrix(Matrix::Identity(p, p)); }

SpdMatrix sym_inv_sqrt(const SpdMatrix& m) {
  const auto eig = checked_eigen(m.matrix());
  const Vector inv_root = eig.eigenvalues().array().rsqrt();
  Matrix a = eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
  a = 0.5 * (a + a.transpose()).eval();
  return SpdMatrix(std::move(a));
}

double mahalanobis_sq(const Vector& x, const Vector& v, const SpdMatrix& s) {
  if (x.size() != v.size() || x.size() != s.dim()) {
    throw Error(ErrorKind::InvalidConfig, "dimension mismatch in mahalanobis_sq");
  }
  const Eigen::LLT<Matrix> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotSpd, "Cholesky factorisation failed");
  }
  const Vector diff = x - v;
  const double d2 = diff.dot(llt.solve(diff));
  return d2 < 0.0 ? 0.0 : d2;
}

Matrix standardize(const Sample& sample, const Vector& center, const SpdMatrix& scatter) {
  if (sample.cols() != center.size() || sample.cols() != scatter.dim()) {
    throw Error(ErrorKind::InvalidConfig, "dimension mismatch in standardize");
  }
  const Matrix root = sym_inv_sqrt(scatter).matrix();
  return (sample.rowwise() - center.transpose()) * root;
}

PairwiseDistances pairwise_distances(const Sample& sample, const Vector& center,
                                     const SpdMatrix& scatter) {
  const Eigen::Index n = sample.rows();
  if (n < 2) {
    throw Error(ErrorKind::TooFewRows, "pairwise distances need at least two rows");
  }
  const Matrix z = standardize(sample, center, scatter);
  PairwiseDistances out{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.plus(j, j) = 2.0 * z.row(j).norm();
    for (Eigen::Index i = 0; i < j; ++i) {
      const double dm = (z.row(i) - z.row(j)).norm();
      const double dp = (z.row(i) + z.row(j)).norm();
      out.minus(i, j) = out.minus(j, i) = dm;
      out.plus(i, j) = out.plus(j, i) = dp;
    }
  }
  return out;
}

}  // namespace ellipsym
