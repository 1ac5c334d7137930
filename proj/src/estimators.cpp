#include "ellipsym/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ellipsym/error.hpp"
#include "ellipsym/rng.hpp"

namespace ellipsym {

namespace {

// Stream tags keep the S and DS draws independent for a shared seed.
constexpr std::uint64_t kStreamS = 0x53;
constexpr std::uint64_t kStreamDs = 0x4453;
constexpr std::uint64_t kStreamBeta = 0xbe7a;

constexpr double kMadConsistency = 1.4826;

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double chi2_quantile(int p, double q) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(p)), q);
}

// Sample rows reordered canonically.
Matrix reorder_rows(const Sample& sample, const std::vector<Eigen::Index>& order) {
  Matrix out(sample.rows(), sample.cols());
  for (Eigen::Index i = 0; i < sample.rows(); ++i) out.row(i) = sample.row(order[static_cast<std::size_t>(i)]);
  return out;
}

// Weighted mean and covariance (divisor: sum of weights).
bool weighted_moments(const Matrix& x, std::span<const double> w, Vector& mean, Matrix& cov) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) return false;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  mean.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double* col = x.col(j).data();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += w[static_cast<std::size_t>(i)] * col[i];
    mean(j) = acc / total;
  }
  cov.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double* cj = x.col(j).data();
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double* ck = x.col(k).data();
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += w[static_cast<std::size_t>(i)] * (cj[i] - mean(j)) * (ck[i] - mean(k));
      }
      cov(j, k) = cov(k, j) = acc / total;
    }
  }
  return cov.allFinite();
}

// Mahalanobis distances of all rows w.r.t. (m, S) through a Cholesky factor.
bool mahalanobis_all(const Matrix& x, const Vector& m, const Matrix& s, std::vector<double>& d) {
  const Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::Index p = x.cols();
  const Eigen::Index n = x.rows();
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(p, p));
  d.assign(static_cast<std::size_t>(n), 0.0);
  // Column sweeps keep the inner loop contiguous over observations.
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::fill(y.begin(), y.end(), 0.0);
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double l = l_inv(j, k);
      const double mk = m(k);
      const double* col = x.col(k).data();
      for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += l * (col[i] - mk);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = y[static_cast<std::size_t>(i)];
      d[static_cast<std::size_t>(i)] += v * v;
    }
  }
  for (auto& v : d) v = std::sqrt(v);
  return true;
}

// Rescales a positive definite matrix to unit determinant.
bool unit_determinant(Matrix& s) {
  const Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return false;
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (!std::isfinite(log_det)) return false;
  s *= std::exp(-log_det / static_cast<double>(s.rows()));
  return true;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::Classical: return "cl";
    case EstimatorKind::SEstimator: return "s";
    case EstimatorKind::DonohoStahel: return "ds";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "cl" || name == "classical") return EstimatorKind::Classical;
  if (name == "s" || name == "s-estimator" || name == "sest") return EstimatorKind::SEstimator;
  if (name == "ds" || name == "donoho-stahel") return EstimatorKind::DonohoStahel;
  throw Error(ErrorKind::InvalidConfig, "unknown estimator '" + std::string(name) + "'");
}

void EstimatorConfig::validate() const {
  if (!(bdp > 0.0 && bdp <= 0.5)) throw Error(ErrorKind::InvalidConfig, "bdp must lie in (0, 0.5]");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "tol must be positive");
  if (tukey_c && !(*tukey_c > 0.0)) throw Error(ErrorKind::InvalidConfig, "tukey_c must be positive");
  if (max_iter < 1 || n_subsets < 1 || n_best < 1 || n_directions < 0) {
    throw Error(ErrorKind::InvalidConfig, "iteration and subset counts must be positive");
  }
}

std::vector<Eigen::Index> canonical_order(const Sample& sample) {
  const Eigen::Index n = sample.rows();
  const Vector mean = sample.colwise().mean();
  const Matrix centred = sample.rowwise() - mean.transpose();
  const Matrix cov = centred.transpose() * centred / static_cast<double>(n);
  std::vector<double> d;
  if (!mahalanobis_all(sample, mean, cov, d)) {
    throw Error(ErrorKind::Singular, "sample covariance is singular");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double da = d[static_cast<std::size_t>(a)];
    const double db = d[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    for (Eigen::Index k = 0; k < sample.cols(); ++k) {
      if (sample(a, k) != sample(b, k)) return sample(a, k) < sample(b, k);
    }
    return false;
  });
  return order;
}

LocationScatter classical_estimate(const Sample& sample) {
  const Eigen::Index n = sample.rows();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "classical estimate needs n >= 2");
  const Vector mean = sample.colwise().mean();
  const Matrix centred = sample.rowwise() - mean.transpose();
  Matrix cov = centred.transpose() * centred / static_cast<double>(n);
  try {
    return {mean, SpdMatrix(std::move(cov)), EstimatorKind::Classical, 1, true};
  } catch (const Error&) {
    throw Error(ErrorKind::Singular, "centred sample has rank below p");
  }
}

// ---------------------------------------------------------------------------
// Tukey biweight

TukeyValues tukey_functions(double y, double c) noexcept {
  const double a = std::abs(y);
  if (a > c) return {c * c / 6.0, 0.0, 0.0, 0.0};
  const double t = (y / c) * (y / c);
  const double one_minus = 1.0 - t;
  const double u = one_minus * one_minus;
  return {
      (c * c / 6.0) * (1.0 - one_minus * one_minus * one_minus),
      y * u,
      1.0 - 6.0 * t + 5.0 * t * t,
      u,
  };
}

double tukey_rho(double y, double c) noexcept {
  const double t = (y / c) * (y / c);
  if (t >= 1.0) return c * c / 6.0;
  const double one_minus = 1.0 - t;
  return (c * c / 6.0) * (1.0 - one_minus * one_minus * one_minus);
}

double tukey_expected_rho(int p, double c) {
  const double x = 0.5 * c * c;
  const double dp = p;
  auto cdf = [x](double dof) { return boost::math::gamma_p(0.5 * dof, x); };
  const double m1 = dp;
  const double m2 = dp * (dp + 2.0);
  const double m3 = dp * (dp + 2.0) * (dp + 4.0);
  return 0.5 * m1 * cdf(dp + 2.0) - m2 / (2.0 * c * c) * cdf(dp + 4.0) +
         m3 / (6.0 * c * c * c * c) * cdf(dp + 6.0) + (c * c / 6.0) * (1.0 - cdf(dp));
}

namespace {

double tukey_c_solve(int p, double bdp);

}  // namespace

double tukey_c_for_bdp(int p, double bdp) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  {
    std::lock_guard lock(mutex);
    const auto it = cache.find({p, bdp});
    if (it != cache.end()) return it->second;
  }
  const double c = tukey_c_solve(p, bdp);
  std::lock_guard lock(mutex);
  cache.emplace(std::make_pair(p, bdp), c);
  return c;
}

namespace {

double tukey_c_solve(int p, double bdp) {
  if (p < 1) throw Error(ErrorKind::InvalidConfig, "dimension must be positive");
  if (!(bdp > 0.0 && bdp <= 0.5)) throw Error(ErrorKind::InvalidConfig, "bdp must lie in (0, 0.5]");
  // E[rho_c] / (c^2/6) decreases from 1 to 0 as c grows.
  auto excess = [&](double c) { return tukey_expected_rho(p, c) - bdp * c * c / 6.0; };
  double lo = 1e-8;
  double hi = 2.0 * std::sqrt(3.0 * p / bdp) + 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * hi) return 0.5 * (lo + hi);
  }
  throw Error(ErrorKind::NoConvergence, "tukey_c_for_bdp bisection did not converge");
}

}  // namespace

double m_scale(std::span<const double> distances, double c, double b, double tol, int max_iter) {
  const std::size_t n = distances.size();
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "m_scale needs distances");
  std::vector<double> tmp(distances.begin(), distances.end());
  double s = median_inplace(tmp);
  if (!(s > 0.0)) {
    s = std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(n);
  }
  if (!(s > 0.0)) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    double mean_rho = 0.0;
    double mean_psi_r = 0.0;
    const double inv_s = 1.0 / s;
    for (const double d : distances) {
      const double r = d * inv_s;
      const double t = (r / c) * (r / c);
      if (t >= 1.0) {
        mean_rho += c * c / 6.0;
      } else {
        const double om = 1.0 - t;
        mean_rho += (c * c / 6.0) * (1.0 - om * om * om);
        mean_psi_r += r * r * om * om;
      }
    }
    mean_rho *= inv_n;
    mean_psi_r *= inv_n;
    const double h = mean_rho - b;
    double step;  // change of log s
    if (mean_psi_r > 1e-300) {
      step = std::clamp(h / mean_psi_r, -1.0, 1.0);
    } else {
      step = mean_rho > b ? 1.0 : -1.0;
    }
    s *= std::exp(step);
    if (std::abs(step) <= tol) return s;
  }
  throw Error(ErrorKind::NoConvergence, "M-scale iteration did not converge");
}

// ---------------------------------------------------------------------------
// S-estimator (fast-S style)

namespace {

struct SCandidate {
  double scale = std::numeric_limits<double>::infinity();
  int index = -1;
  Vector center;
  Matrix shape;  // unit determinant
};

bool candidate_less(const SCandidate& a, const SCandidate& b) {
  if (a.scale != b.scale) return a.scale < b.scale;
  return a.index < b.index;
}

double mean_rho(std::span<const double> d, double s, double c) {
  double acc = 0.0;
  for (const double x : d) acc += tukey_rho(x / s, c);
  return acc / static_cast<double>(d.size());
}

// One reweighting step: weights u(d_i / s), new centre and unit-det shape.
bool reweight(const Matrix& x, std::span<const double> d, double s, double c, Vector& center,
              Matrix& shape, std::vector<double>& w) {
  w.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) w[i] = tukey_functions(d[i] / s, c).u;
  if (!weighted_moments(x, w, center, shape)) return false;
  return unit_determinant(shape);
}

// Change between two (centre, shape) iterates measured in the metric of the
// first one; unchanged by affine maps of the data.
double invariant_move(const Vector& center, const Matrix& shape, double scale,
                      const Vector& next_center, const Matrix& next_shape) {
  const Eigen::LLT<Matrix> llt(shape);
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(shape.rows(), shape.cols()));
  const Vector step = l_inv * (next_center - center);
  const Matrix rel = l_inv * next_shape * l_inv.transpose() -
                     Matrix::Identity(shape.rows(), shape.cols());
  return step.norm() / scale + rel.norm();
}

}  // namespace

LocationScatter s_estimate(const Sample& sample, const EstimatorConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = sample.rows();
  const Eigen::Index p = sample.cols();
  if (n <= p) throw Error(ErrorKind::Singular, "S-estimator needs n > p");
  const double c = cfg.tukey_c ? *cfg.tukey_c : tukey_c_for_bdp(static_cast<int>(p), cfg.bdp);
  const double b = cfg.bdp * c * c / 6.0;

  const auto order = canonical_order(sample);
  const Matrix x = reorder_rows(sample, order);
  Rng rng = make_stream(cfg.seed, {kStreamS});

  std::vector<SCandidate> best;  // sorted, at most n_best entries
  const auto keep = static_cast<std::size_t>(cfg.n_best);
  std::vector<double> d;
  std::vector<double> w;
  const int max_attempts = 20 * cfg.n_subsets;
  int accepted = 0;
  for (int attempt = 0; attempt < max_attempts && accepted < cfg.n_subsets; ++attempt) {
    const auto idx = draw_distinct(n, p + 1, rng);
    Matrix sub(p + 1, p);
    for (Eigen::Index k = 0; k <= p; ++k) sub.row(k) = x.row(idx[static_cast<std::size_t>(k)]);
    Vector center = sub.colwise().mean();
    const Matrix centred = sub.rowwise() - center.transpose();
    Matrix shape = centred.transpose() * centred / static_cast<double>(p + 1);
    if (!unit_determinant(shape) || !mahalanobis_all(x, center, shape, d)) continue;
    ++accepted;
    double s = m_scale(d, c, b, 1e-8);
    if (!(s > 0.0)) continue;
    if (!reweight(x, d, s, c, center, shape, w) || !mahalanobis_all(x, center, shape, d)) continue;
    // A candidate beats the current k-th best iff its M-scale is smaller,
    // i.e. iff mean rho at the k-th best scale is below b.
    if (best.size() == keep && mean_rho(d, best.back().scale, c) >= b) continue;
    s = m_scale(d, c, b, 1e-10);
    if (!(s > 0.0)) continue;
    SCandidate cand{s, accepted - 1, center, shape};
    best.insert(std::upper_bound(best.begin(), best.end(), cand, candidate_less), std::move(cand));
    if (best.size() > keep) best.pop_back();
  }
  if (best.empty()) throw Error(ErrorKind::Singular, "no non-singular elemental subset found");

  SCandidate winner;
  int winner_iterations = 0;
  bool winner_converged = false;
  for (auto& cand : best) {
    Vector center = cand.center;
    Matrix shape = cand.shape;
    if (!mahalanobis_all(x, center, shape, d)) continue;
    double s = m_scale(d, c, b);
    bool converged = false;
    int iter = 0;
    while (iter < cfg.max_iter) {
      ++iter;
      Vector next_center = center;
      Matrix next_shape = shape;
      if (!reweight(x, d, s, c, next_center, next_shape, w) ||
          !mahalanobis_all(x, next_center, next_shape, d)) {
        break;
      }
      const double next_s = m_scale(d, c, b);
      const double change = std::abs(next_s - s) / s;
      const double move = invariant_move(center, shape, s, next_center, next_shape);
      center = std::move(next_center);
      shape = std::move(next_shape);
      s = next_s;
      if (change <= cfg.tol && move <= std::sqrt(cfg.tol)) {
        converged = true;
        break;
      }
    }
    SCandidate refined{s, cand.index, center, shape};
    if (winner.index < 0 || candidate_less(refined, winner)) {
      winner = std::move(refined);
      winner_iterations = iter;
      winner_converged = converged;
    }
  }
  if (winner.index < 0) throw Error(ErrorKind::Singular, "S-estimator refinement degenerated");
  if (!winner_converged) {
    throw Error(ErrorKind::NoConvergence,
                "S-estimator refinement did not converge in " + std::to_string(cfg.max_iter) +
                    " iterations");
  }
  Matrix v = winner.shape * (winner.scale * winner.scale);
  try {
    return {winner.center, SpdMatrix(std::move(v)), EstimatorKind::SEstimator, winner_iterations,
            true};
  } catch (const Error&) {
    throw Error(ErrorKind::Singular, "S-estimator scatter is not positive definite");
  }
}

// ---------------------------------------------------------------------------
// Donoho-Stahel

namespace {

// Unit normal of the hyperplane through the p given points; empty if the
// points are affinely dependent.
std::optional<Vector> hyperplane_normal(const Matrix& points) {
  const Eigen::Index p = points.cols();
  if (p == 1) return Vector::Ones(1);
  if (p == 2) {
    const Vector diff = (points.row(1) - points.row(0)).transpose();
    Vector a(2);
    a << -diff[1], diff[0];
    const double norm = a.norm();
    if (!(norm > 0.0)) return std::nullopt;
    return a / norm;
  }
  const Matrix edges = points.bottomRows(p - 1).rowwise() - points.row(0);
  Eigen::FullPivLU<Matrix> lu(edges);
  if (lu.rank() < p - 1) return std::nullopt;
  Vector a = lu.kernel().col(0);
  const double norm = a.norm();
  if (!(norm > 0.0)) return std::nullopt;
  return a / norm;
}

}  // namespace

std::vector<double> ds_outlyingness(const Sample& sample, const EstimatorConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = sample.rows();
  const Eigen::Index p = sample.cols();
  if (n <= p) throw Error(ErrorKind::Singular, "Donoho-Stahel estimator needs n > p");
  const auto order = canonical_order(sample);
  const Matrix x = reorder_rows(sample, order);
  Rng rng = make_stream(cfg.seed, {kStreamDs});
  const int n_dir = cfg.n_directions > 0 ? cfg.n_directions : std::max<int>(1000, 250 * static_cast<int>(p));

  std::vector<double> outlying(static_cast<std::size_t>(n), 0.0);
  std::vector<double> proj(static_cast<std::size_t>(n));
  std::vector<double> scratch(static_cast<std::size_t>(n));
  Matrix pts(p, p);
  int used = 0;
  const int max_attempts = 20 * n_dir;
  for (int attempt = 0; attempt < max_attempts && used < n_dir; ++attempt) {
    const auto idx = draw_distinct(n, p, rng);
    for (Eigen::Index k = 0; k < p; ++k) pts.row(k) = x.row(idx[static_cast<std::size_t>(k)]);
    const auto a = hyperplane_normal(pts);
    if (!a) continue;
    ++used;
    Eigen::Map<Vector>(proj.data(), n) = x * *a;
    scratch = proj;
    const double med = median_inplace(scratch);
    double spread = 0.0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
      scratch[i] = std::abs(proj[i] - med);
      spread = std::max(spread, scratch[i]);
    }
    const double mad = kMadConsistency * median_inplace(scratch);
    if (!(mad > 1e-12 * spread)) {
      throw Error(ErrorKind::DegenerateDirection,
                  "projection with zero MAD (more than half the projected points tie)");
    }
    for (std::size_t i = 0; i < proj.size(); ++i) {
      outlying[i] = std::max(outlying[i], std::abs(proj[i] - med) / mad);
    }
  }
  if (used == 0) throw Error(ErrorKind::Singular, "no non-degenerate projection direction found");
  // Back to the caller's row order.
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) out[static_cast<std::size_t>(order[i])] = outlying[i];
  return out;
}

std::vector<double> ds_weights(const Sample& sample, const EstimatorConfig& cfg) {
  const auto o = ds_outlyingness(sample, cfg);
  const int p = static_cast<int>(sample.cols());
  std::vector<double> sq(o.size());
  std::transform(o.begin(), o.end(), sq.begin(), [](double v) { return v * v; });
  std::vector<double> tmp = sq;
  const double med = median_inplace(tmp);
  if (!(med > 0.0)) throw Error(ErrorKind::Singular, "median outlyingness is zero");
  const double scale = med / chi2_quantile(p, 0.5);
  const double cutoff = chi2_quantile(p, 0.95);
  std::vector<double> w(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) w[i] = (sq[i] / scale <= cutoff) ? 1.0 : 0.0;
  return w;
}

LocationScatter ds_estimate(const Sample& sample, const EstimatorConfig& cfg) {
  const int p = static_cast<int>(sample.cols());
  const auto w = ds_weights(sample, cfg);
  Vector mean;
  Matrix cov;
  if (!weighted_moments(sample, w, mean, cov)) {
    throw Error(ErrorKind::Singular, "Donoho-Stahel weights are all zero");
  }
  std::vector<double> d;
  if (!mahalanobis_all(sample, mean, cov, d)) {
    throw Error(ErrorKind::Singular, "weighted covariance is singular");
  }
  for (auto& v : d) v *= v;
  const double med = median_inplace(d);
  cov *= med / chi2_quantile(p, 0.5);
  try {
    return {mean, SpdMatrix(std::move(cov)), EstimatorKind::DonohoStahel, 1, true};
  } catch (const Error&) {
    throw Error(ErrorKind::Singular, "Donoho-Stahel scatter is not positive definite");
  }
}

// ---------------------------------------------------------------------------

MonteCarloEstimate beta_constant(int p, double c, long samples, std::uint64_t seed) {
  if (p < 1 || samples < 2 || !(c > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "beta_constant needs p >= 1, c > 0, samples >= 2");
  }
  Rng rng = make_stream(seed, {kStreamBeta});
  std::normal_distribution<double> normal;
  const double inv_p = 1.0 / p;
  double mean = 0.0;
  double m2 = 0.0;
  for (long k = 0; k < samples; ++k) {
    double r2 = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z = normal(rng);
      r2 += z * z;
    }
    const auto t = tukey_functions(std::sqrt(r2), c);
    const double g = (1.0 - inv_p) * t.u + inv_p * t.psi_prime;
    const double delta = g - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (g - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

LocationScatter estimate(EstimatorKind kind, const Sample& sample, const EstimatorConfig& cfg) {
  switch (kind) {
    case EstimatorKind::Classical: return classical_estimate(sample);
    case EstimatorKind::SEstimator: return s_estimate(sample, cfg);
    case EstimatorKind::DonohoStahel: return ds_estimate(sample, cfg);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown estimator kind");
}

EstimatorFn make_estimator(EstimatorKind kind, EstimatorConfig cfg) {
  return [kind, cfg](const Sample& sample, std::uint64_t seed) {
    EstimatorConfig local = cfg;
    local.seed = seed;
    return estimate(kind, sample, local);
  };
}

}  // namespace ellipsym
