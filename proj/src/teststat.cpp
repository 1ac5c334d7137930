#include "ellipsym/teststat.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "ellipsym/error.hpp"
#include "ellipsym/quadrature.hpp"

namespace ellipsym {

namespace {

double sinc(double x) noexcept { return x == 0.0 ? 1.0 : std::sin(x) / x; }

void require_dimension(int p) {
  if (p < 1) throw Error(ErrorKind::InvalidConfig, "dimension must be >= 1");
}

// 2 c_p with c_p = Gamma(p/2) / (sqrt(pi) Gamma((p-1)/2)).
double theta_form_constant(int p) {
  return 2.0 * std::exp(std::lgamma(0.5 * p) - std::lgamma(0.5 * (p - 1))) /
         std::sqrt(std::numbers::pi);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

constexpr const char* kFTableMagic = "# ellipsym-ftable 1";

}  // namespace

double f_scalar(double u, int p) {
  require_dimension(p);
  if (u < 0.0 || !std::isfinite(u)) throw Error(ErrorKind::InvalidConfig, "f argument must be finite and >= 0");
  if (u == 0.0) return 1.0;
  if (p == 1) return sinc(u);
  // U_1 = cos(theta) with density proportional to sin^{p-2}(theta) on [0, pi].
  const double k = theta_form_constant(p);
  const int power = p - 2;
  const auto integrand = [u, power](double theta) {
    const double s = std::sin(theta);
    double w = 1.0;
    for (int j = 0; j < power; ++j) w *= s;
    return sinc(u * std::cos(theta)) * w;
  };
  const int panels = static_cast<int>(std::ceil(u / 8.0)) + 1;
  const auto res = quadrature::integrate_adaptive(integrand, 0.0, 0.5 * std::numbers::pi,
                                                  1e-9 / k, panels);
  return std::clamp(k * res.value, -1.0, 1.0);
}

double f_asymptotic(double u, int p) {
  require_dimension(p);
  if (p == 1) return sinc(u);
  if (u <= 0.0) throw Error(ErrorKind::InvalidConfig, "asymptotic f needs u > 0");
  using cd = std::complex<double>;
  const double nu = 0.5 * p - 1.0;
  const double a0 = 0.5 * (p - 1);
  // int_0^inf E cos(s U_1) ds.
  const double total =
      std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * p) - std::lgamma(a0));
  // E cos(s U_1) = Gamma(p/2) (2/s)^nu J_nu(s); Hankel's expansion of J_nu
  // turns the tail integral into incomplete integrals of e^{is} s^{-a}.
  const double amp = std::exp(std::lgamma(0.5 * p)) * std::pow(2.0, nu) *
                     std::sqrt(2.0 / std::numbers::pi);
  const double theta0 = 0.5 * nu * std::numbers::pi + 0.25 * std::numbers::pi;
  constexpr int kTerms = 14;
  const cd i(0.0, 1.0);
  cd series(0.0, 0.0);
  double ak = 1.0;  // a_k(nu)
  cd ik(1.0, 0.0);  // i^k
  for (int k = 0; k < kTerms; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      ak *= (4.0 * nu * nu - odd * odd) / (8.0 * k);
      ik *= i;
    }
    if (ak == 0.0) break;
    // int_u^inf e^{is} s^{-a} ds ~ i e^{iu} u^{-a} sum_m (-i)^m (a)_m u^{-m}.
    const double a = a0 + k;
    cd inner(0.0, 0.0);
    double poch = 1.0;
    cd mi(1.0, 0.0);
    for (int m = 0; m + k < kTerms; ++m) {
      if (m > 0) {
        poch *= (a + m - 1.0) / u;
        mi *= -i;
      }
      inner += mi * poch;
    }
    series += ik * ak * std::pow(u, -a) * inner;
  }
  const cd tail = amp * std::exp(i * (u - theta0)) * i * series;
  return (total - tail.real()) / u;
}

double f_monte_carlo(double u, int p, long samples, Rng& rng) {
  require_dimension(p);
  if (samples < 1) throw Error(ErrorKind::InvalidConfig, "Monte Carlo f needs >= 1 sample");
  if (u == 0.0) return 1.0;
  double sum = 0.0;
  for (long s = 0; s < samples; ++s) sum += sinc(u * uniform_direction(p, rng)(0));
  return sum / static_cast<double>(samples);
}

std::string_view to_string(FMethod method) noexcept {
  return method == FMethod::Quadrature ? "quadrature" : "montecarlo";
}

FMethod parse_fmethod(std::string_view name) {
  if (name == "quadrature") return FMethod::Quadrature;
  if (name == "montecarlo" || name == "mc") return FMethod::MonteCarlo;
  throw Error(ErrorKind::InvalidConfig, "unknown f method '" + std::string(name) + "'");
}

FTable::FTable(int p, double u_max, double step, FMethod method, long mc_samples,
               std::uint64_t seed, double tail_start)
    : p_(p), step_(step), method_(method), mc_samples_(mc_samples), seed_(seed),
      tail_start_(tail_start) {
  require_dimension(p);
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::InvalidConfig, "f-table step must be > 0");
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw Error(ErrorKind::InvalidConfig, "f-table u_max must be > 0");
  if (!(tail_start > 0.0)) throw Error(ErrorKind::InvalidConfig, "f-table tail start must be > 0");
  if (method == FMethod::MonteCarlo && mc_samples < 1) {
    throw Error(ErrorKind::InvalidConfig, "Monte Carlo f-table needs mc_samples >= 1");
  }
  values_.push_back(1.0);
  grow_to(std::min(u_max, tail_start_ + step_));
}

double FTable::knot_value(std::size_t k) const {
  if (k == 0) return 1.0;
  const double u = knot(k);
  if (method_ == FMethod::Quadrature) return f_scalar(u, p_);
  Rng rng = make_stream(seed_, {static_cast<std::uint64_t>(k)});
  return f_monte_carlo(u, p_, mc_samples_, rng);
}

void FTable::extend_to(double u_required) {
  if (covers(u_required)) return;
  grow_to(std::min(2.0 * u_required, tail_start_ + step_));
}

void FTable::grow_to(double target) {
  const auto last = static_cast<std::size_t>(std::ceil(target / step_));
  values_.reserve(last + 1);
  for (std::size_t k = values_.size(); k <= last; ++k) values_.push_back(knot_value(k));
}

double FTable::operator()(double u) const {
  if (u >= tail_start_) return f_asymptotic(u, p_);
  if (!(u >= 0.0)) throw Error(ErrorKind::InvalidConfig, "f argument must be >= 0");
  const double x = u / step_;
  auto k = static_cast<std::size_t>(x);
  if (k >= values_.size()) {
    throw Error(ErrorKind::InvalidConfig, "f-table does not cover u = " + format_double(u));
  }
  if (knot(k) == u) return values_[k];
  if (k + 1 >= values_.size()) {
    if (u <= u_max()) return values_.back();
    throw Error(ErrorKind::InvalidConfig, "f-table does not cover u = " + format_double(u));
  }
  const double w = x - static_cast<double>(k);
  return values_[k] + w * (values_[k + 1] - values_[k]);
}

void FTable::save(std::ostream& out) const {
  out << kFTableMagic << '\n';
  out << "# p=" << p_ << " method=" << to_string(method_) << " step=" << format_double(step_)
      << " mc_samples=" << mc_samples_ << " seed=" << seed_
      << " tail_start=" << format_double(tail_start_) << '\n';
  out << "u,f\n";
  for (std::size_t k = 0; k < values_.size(); ++k) {
    out << format_double(knot(k)) << ',' << format_double(values_[k]) << '\n';
  }
}

FTable FTable::load(std::istream& in, int expected_p) {
  std::string line;
  if (!std::getline(in, line) || line != kFTableMagic) {
    throw Error(ErrorKind::VersionError, "not an f-table file (expected '" +
                                             std::string(kFTableMagic) + "')");
  }
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorKind::VersionError, "missing f-table parameter line");
  }
  FTable t;
  bool seen_p = false;
  bool seen_step = false;
  std::istringstream fields(line.substr(2));
  std::string field;
  try {
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::VersionError, "bad header field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "p") {
        t.p_ = std::stoi(value);
        seen_p = true;
      } else if (key == "method") {
        t.method_ = parse_fmethod(value);
      } else if (key == "step") {
        t.step_ = std::stod(value);
        seen_step = true;
      } else if (key == "mc_samples") {
        t.mc_samples_ = std::stol(value);
      } else if (key == "seed") {
        t.seed_ = std::stoull(value);
      } else if (key == "tail_start") {
        t.tail_start_ = std::stod(value);
      } else {
        throw Error(ErrorKind::VersionError, "unknown header field '" + key + "'");
      }
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::VersionError, "unreadable f-table header '" + line + "'");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::VersionError) throw;
    throw Error(ErrorKind::VersionError, e.what());
  }
  if (!seen_p || !seen_step || t.p_ < 1 || !(t.step_ > 0.0)) {
    throw Error(ErrorKind::VersionError, "f-table header lacks p or step");
  }
  if (expected_p > 0 && t.p_ != expected_p) {
    throw Error(ErrorKind::VersionError, "f-table built for p=" + std::to_string(t.p_) +
                                             ", need p=" + std::to_string(expected_p));
  }
  if (!std::getline(in, line) || line != "u,f") {
    throw Error(ErrorKind::VersionError, "missing 'u,f' column header");
  }
  long lineno = 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorKind::ParseError, "f-table line " + std::to_string(lineno) + ": expected 'u,f'");
    }
    try {
      t.values_.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::ParseError, "f-table line " + std::to_string(lineno) + ": not a number");
    }
  }
  if (t.values_.empty() || t.values_.front() != 1.0) {
    throw Error(ErrorKind::ParseError, "f-table must start with f(0) = 1");
  }
  return t;
}

SharedFTable::SharedFTable(FTable table) : table_(std::make_shared<const FTable>(std::move(table))) {}

std::shared_ptr<const FTable> SharedFTable::covering(double u_required) {
  std::lock_guard lock(mutex_);
  if (!table_->covers(u_required)) {
    auto grown = std::make_shared<FTable>(*table_);
    grown->extend_to(u_required);
    table_ = std::move(grown);
  }
  return table_;
}

std::shared_ptr<const FTable> SharedFTable::current() const {
  std::lock_guard lock(mutex_);
  return table_;
}

void TestConfig::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorKind::InvalidConfig, "b must be > 0");
  if (nboot < 1) throw Error(ErrorKind::InvalidConfig, "nboot must be >= 1");
  if (!(ftable_step > 0.0)) throw Error(ErrorKind::InvalidConfig, "ftable_step must be > 0");
  if (!(ftable_tail_start > 0.0)) throw Error(ErrorKind::InvalidConfig, "ftable_tail_start must be > 0");
  if (ftable_method == FMethod::MonteCarlo && ftable_mc_samples < 1) {
    throw Error(ErrorKind::InvalidConfig, "ftable_mc_samples must be >= 1");
  }
  if (oracle_grid < 1 || oracle_directions < 1) {
    throw Error(ErrorKind::InvalidConfig, "oracle grid and direction counts must be >= 1");
  }
  estimator_config.validate();
}

double max_kernel_argument(const Matrix& standardized, double b) {
  if (standardized.rows() == 0) return 0.0;
  return 2.0 * b * standardized.rowwise().norm().maxCoeff();
}

double statistic_from_standardized(const Matrix& z, double b, const FTable& ft) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "statistic needs n >= 2");
  if (ft.p() != p) {
    throw Error(ErrorKind::InvalidConfig, "f-table dimension " + std::to_string(ft.p()) +
                                              " does not match sample dimension " + std::to_string(p));
  }
  // Row-major copy so each pair reads two contiguous rows.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> zr = z;
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* zj = zr.data() + j * p;
    double norm_sq = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) norm_sq += zj[c] * zj[c];
    double row = 1.0 - ft(2.0 * b * std::sqrt(norm_sq));
    double cross = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double* zi = zr.data() + i * p;
      double dm = 0.0;
      double dp = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) {
        const double m = zi[c] - zj[c];
        const double s = zi[c] + zj[c];
        dm += m * m;
        dp += s * s;
      }
      cross += ft(b * std::sqrt(dm)) - ft(b * std::sqrt(dp));
    }
    total += row + 2.0 * cross;
  }
  return total / (2.0 * static_cast<double>(n));
}

double statistic_closed_form(const Sample& sample, const LocationScatter& est, double b,
                             FTable& ft) {
  const Matrix z = standardize(sample, est.mu, est.V);
  ft.extend_to(max_kernel_argument(z, b));
  return statistic_from_standardized(z, b, ft);
}

double statistic_closed_form(const Sample& sample, const LocationScatter& est, double b,
                             SharedFTable& ft) {
  const Matrix z = standardize(sample, est.mu, est.V);
  const auto table = ft.covering(max_kernel_argument(z, b));
  return statistic_from_standardized(z, b, *table);
}

double statistic_direct(const Sample& sample, const LocationScatter& est, double b,
                        int grid_points, int directions, std::uint64_t seed) {
  if (grid_points < 1 || directions < 1) {
    throw Error(ErrorKind::InvalidConfig, "direct statistic needs grid_points, directions >= 1");
  }
  if (!(b > 0.0)) throw Error(ErrorKind::InvalidConfig, "b must be > 0");
  const Matrix z = standardize(sample, est.mu, est.V);
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  if (n < 1) throw Error(ErrorKind::TooFewRows, "direct statistic needs n >= 1");

  // Midpoints t_i = -b + (i + 1/2) h. The integrand is even in t, so only
  // the positive midpoints are evaluated; for odd grids the middle point is
  // t = 0 where every sine vanishes.
  const double h = 2.0 * b / grid_points;
  const int half = grid_points / 2;
  const double first = (grid_points % 2 == 0) ? 0.5 * h : h;
  std::vector<double> sums(static_cast<std::size_t>(half));
  Rng rng = make_stream(seed, {0});
  Vector proj(n);
  double acc = 0.0;
  for (int d = 0; d < directions; ++d) {
    const Vector a = uniform_direction(p, rng);
    proj.noalias() = z * a;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double theta = proj(k);
      double s = std::sin(first * theta);
      double c = std::cos(first * theta);
      const double ds = std::sin(h * theta);
      const double dc = std::cos(h * theta);
      for (int i = 0; i < half; ++i) {
        sums[static_cast<std::size_t>(i)] += s;
        const double s_next = s * dc + c * ds;
        c = c * dc - s * ds;
        s = s_next;
      }
    }
    double dir_total = 0.0;
    for (double sum : sums) dir_total += sum * sum;
    acc += dir_total;
  }
  // Each positive midpoint stands for itself and its mirror image.
  return 2.0 * acc / (static_cast<double>(n) * grid_points * static_cast<double>(directions));
}

FTable ftable_for(const Matrix& standardized, const TestConfig& cfg) {
  const double need = 1.1 * max_kernel_argument(standardized, cfg.b);
  const double u_max = std::max(need, 16.0 * cfg.ftable_step);
  return FTable(static_cast<int>(standardized.cols()), u_max, cfg.ftable_step, cfg.ftable_method,
                cfg.ftable_mc_samples, cfg.seed, cfg.ftable_tail_start);
}

}  // namespace ellipsym
