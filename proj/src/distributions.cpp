#include "ellipsym/distributions.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "ellipsym/error.hpp"

namespace ellipsym {

namespace {

struct NullEntry {
  int p;
  int index;
  NullId id;
};

constexpr NullEntry kNulls[] = {
    {2, 1, NullId::Normal},     {2, 2, NullId::Mix90N10Cauchy}, {2, 3, NullId::Mix90N10T3},
    {2, 4, NullId::T3},         {2, 5, NullId::UnifSphere},     {2, 6, NullId::UnifBall},
    {2, 7, NullId::Cauchy},     {5, 1, NullId::Normal},         {5, 2, NullId::Pearson2},
    {5, 3, NullId::T5},         {5, 4, NullId::Cauchy},
};

double parse_real(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
    throw Error(ErrorKind::UnknownAlternative,
                "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::string format_delta(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", delta);
  return buf;
}

double chi_square(double dof, Rng& rng) {
  std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
  return gamma(rng);
}

double beta_variate(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

void fill_normal_row(Sample& out, Eigen::Index i, Rng& rng) {
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal(rng);
}

void fill_t_row(Sample& out, Eigen::Index i, double k, Rng& rng) {
  fill_normal_row(out, i, rng);
  out.row(i) *= std::sqrt(k / chi_square(k, rng));
}

void require(int p, Eigen::Index n) {
  if (p < 1) throw Error(ErrorKind::InvalidConfig, "dimension must be >= 1");
  if (n < 0) throw Error(ErrorKind::InvalidConfig, "sample size must be >= 0");
}

}  // namespace

NullSpec parse_null(std::string_view name, int p) {
  if (name.substr(0, 3) == "H0_") {
    int index = 0;
    const auto digits = name.substr(3);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (res.ec == std::errc() && res.ptr == digits.data() + digits.size()) {
      for (const auto& e : kNulls) {
        if (e.p == p && e.index == index) return {e.id, p};
      }
    }
  }
  throw Error(ErrorKind::Validation,
              "unknown null id '" + std::string(name) + "' for p=" + std::to_string(p));
}

std::string null_name(const NullSpec& spec) {
  for (const auto& e : kNulls) {
    if (e.p == spec.p && e.id == spec.id) return "H0_" + std::to_string(e.index);
  }
  throw Error(ErrorKind::Validation, "null distribution not defined for p=" + std::to_string(spec.p));
}

AlternativeSpec parse_alternative(std::string_view name, int p) {
  AlternativeSpec spec;
  spec.p = p;
  constexpr std::string_view kStar = "H1_star_";
  constexpr std::string_view kDelta = "H1_delta:";
  if (name.substr(0, kStar.size()) == kStar) {
    const auto tail = name.substr(kStar.size());
    if (tail == "1") spec.fixed = FixedAlternative::Star1;
    else if (tail == "2") spec.fixed = FixedAlternative::Star2;
    else if (tail == "3") spec.fixed = FixedAlternative::Star3;
    else if (tail == "4") spec.fixed = FixedAlternative::Star4;
    else throw Error(ErrorKind::UnknownAlternative, "unknown fixed alternative '" + std::string(name) + "'");
    if (p != 2 && p != 5) {
      throw Error(ErrorKind::UnknownAlternative, "fixed alternatives are defined for p = 2 and p = 5");
    }
    return spec;
  }
  if (name.substr(0, kDelta.size()) == kDelta) {
    const auto rest = name.substr(kDelta.size());
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::UnknownAlternative, "expected H1_delta:<null>:<delta>, got '" + std::string(name) + "'");
    }
    try {
      spec.base = parse_null(rest.substr(0, colon), p);
    } catch (const Error&) {
      throw Error(ErrorKind::UnknownAlternative, "unknown base null in '" + std::string(name) + "'");
    }
    spec.delta = parse_real(rest.substr(colon + 1), "delta");
    if (spec.delta < 0.0) throw Error(ErrorKind::UnknownAlternative, "delta must be >= 0");
    return spec;
  }
  if (name.substr(0, 3) == "H0_") {
    try {
      spec.base = parse_null(name, p);
    } catch (const Error&) {
      throw Error(ErrorKind::UnknownAlternative, "unknown null '" + std::string(name) + "'");
    }
    return spec;
  }
  throw Error(ErrorKind::UnknownAlternative, "unknown alternative '" + std::string(name) + "'");
}

std::string alternative_name(const AlternativeSpec& spec) {
  if (spec.fixed) return "H1_star_" + std::to_string(static_cast<int>(*spec.fixed) + 1);
  return "H1_delta:" + null_name(spec.base) + ":" + format_delta(spec.delta);
}

Sample sample_normal(int p, Eigen::Index n, Rng& rng) {
  require(p, n);
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) fill_normal_row(out, i, rng);
  return out;
}

Sample sample_uniform_sphere(int p, Eigen::Index n, Rng& rng) {
  require(p, n);
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = uniform_direction(p, rng).transpose();
  return out;
}

Sample sample_uniform_ball(int p, Eigen::Index n, Rng& rng) {
  require(p, n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector dir = uniform_direction(p, rng);
    out.row(i) = std::pow(unif(rng), 1.0 / p) * dir.transpose();
  }
  return out;
}

Sample sample_mvt(int p, double k, Eigen::Index n, Rng& rng) {
  require(p, n);
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidConfig, "t degrees of freedom must be > 0");
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) fill_t_row(out, i, k, rng);
  return out;
}

Sample sample_pearson2(int p, double m, Eigen::Index n, Rng& rng) {
  require(p, n);
  if (!(m > 0.0)) throw Error(ErrorKind::InvalidConfig, "Pearson II shape must be > 0");
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector dir = uniform_direction(p, rng);
    out.row(i) = std::sqrt(beta_variate(0.5 * p, m, rng)) * dir.transpose();
  }
  return out;
}

Sample sample_contaminated_normal(int p, double eps, double k, Eigen::Index n, Rng& rng) {
  require(p, n);
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error(ErrorKind::InvalidConfig, "mixing weight must be in [0, 1]");
  if (eps == 0.0) return sample_normal(p, n, rng);
  std::bernoulli_distribution heavy(eps);
  Sample out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (heavy(rng)) {
      fill_t_row(out, i, k, rng);
    } else {
      fill_normal_row(out, i, rng);
    }
  }
  return out;
}

Sample sample_null(const NullSpec& spec, Eigen::Index n, Rng& rng) {
  const int p = spec.p;
  switch (spec.id) {
    case NullId::Normal: return sample_normal(p, n, rng);
    case NullId::Mix90N10Cauchy: return sample_contaminated_normal(p, 0.1, 1.0, n, rng);
    case NullId::Mix90N10T3: return sample_contaminated_normal(p, 0.1, 3.0, n, rng);
    case NullId::T3: return sample_mvt(p, 3.0, n, rng);
    case NullId::UnifSphere: return sample_uniform_sphere(p, n, rng);
    case NullId::UnifBall: return sample_uniform_ball(p, n, rng);
    case NullId::Cauchy: return sample_mvt(p, 1.0, n, rng);
    case NullId::Pearson2: return sample_pearson2(p, 1.5, n, rng);
    case NullId::T5: return sample_mvt(p, 5.0, n, rng);
  }
  throw Error(ErrorKind::Validation, "unknown null distribution");
}

namespace {

Sample sample_fixed(FixedAlternative which, int p, Eigen::Index n, Rng& rng) {
  if (p != 2 && p != 5) {
    throw Error(ErrorKind::UnknownAlternative, "fixed alternatives are defined for p = 2 and p = 5");
  }
  std::exponential_distribution<double> exp1(1.0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Sample out(n, p);
  switch (which) {
    case FixedAlternative::Star1:
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j + 1 < p; ++j) out(i, j) = exp1(rng);
        out(i, p - 1) = normal(rng);
      }
      return out;
    case FixedAlternative::Star2:
      if (p == 2) {
        std::exponential_distribution<double> exp_half(0.5);
        for (Eigen::Index i = 0; i < n; ++i) {
          out(i, 0) = exp1(rng);
          out(i, 1) = exp_half(rng);
        }
      } else {
        for (Eigen::Index i = 0; i < n; ++i) {
          for (int j = 0; j < p; ++j) out(i, j) = exp1(rng);
        }
      }
      return out;
    case FixedAlternative::Star3:
      // Be(5, 1) by inversion: F^{-1}(u) = u^{1/5}.
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) out(i, j) = std::pow(unif(rng), 0.2);
      }
      return out;
    case FixedAlternative::Star4:
      if (p == 2) {
        Vector mu(2);
        mu << 1.0, 2.0;
        Matrix sigma(2, 2);
        sigma << 5.0, -4.0, -4.0, 5.0;
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
        const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                            eig.eigenvectors().transpose();
        std::bernoulli_distribution second(0.5);
        for (Eigen::Index i = 0; i < n; ++i) {
          const bool shifted = second(rng);
          Vector z(2);
          z << normal(rng), normal(rng);
          if (shifted) {
            out.row(i) = (mu + root * z).transpose();
          } else {
            out.row(i) = z.transpose();
          }
        }
      } else {
        for (Eigen::Index i = 0; i < n; ++i) {
          for (int j = 0; j + 1 < p; ++j) out(i, j) = exp1(rng);
          out(i, p - 1) = normal(rng) * std::sqrt(1.0 / chi_square(1.0, rng));
        }
      }
      return out;
  }
  throw Error(ErrorKind::UnknownAlternative, "unknown fixed alternative");
}

}  // namespace

Sample sample_alternative(const AlternativeSpec& spec, Eigen::Index n, Rng& rng) {
  if (spec.fixed) return sample_fixed(*spec.fixed, spec.p, n, rng);
  if (spec.base.p != spec.p) throw Error(ErrorKind::UnknownAlternative, "base null dimension mismatch");
  if (spec.delta < 0.0) throw Error(ErrorKind::UnknownAlternative, "delta must be >= 0");
  // Z first, so that delta = 0 reproduces the null sample draw for draw.
  Sample x = sample_null(spec.base, n, rng);
  if (spec.delta == 0.0) return x;
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double g = normal(rng);
      x(i, j) += spec.delta * g * g;
    }
  }
  return x;
}

}  // namespace ellipsym
