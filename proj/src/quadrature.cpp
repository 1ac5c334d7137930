#include "ellipsym/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ellipsym/error.hpp"

namespace ellipsym::quadrature {

GaussLegendreRule gauss_legendre(int points) {
  if (points < 1) throw Error(ErrorKind::InvalidConfig, "Gauss-Legendre rule needs >= 1 point");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(points));
  rule.weights.resize(static_cast<std::size_t>(points));
  const int half = (points + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi's initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= points; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(points - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(points - 1 - i)] = w;
  }
  if (points % 2 == 1) rule.nodes[static_cast<std::size_t>(points / 2)] = 0.0;
  return rule;
}

double integrate_fixed(const std::function<double(double)>& f, double a, double b,
                       const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  }
  return half * sum;
}

namespace {

const GaussLegendreRule& rule20() {
  static const GaussLegendreRule rule = gauss_legendre(20);
  return rule;
}

struct Refiner {
  const std::function<double(double)>& f;
  int max_depth;
  AdaptiveResult result;

  void panel(double a, double b, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = integrate_fixed(f, a, m, rule20());
    const double right = integrate_fixed(f, m, b, rule20());
    result.evaluations += 40;
    const double diff = std::abs(left + right - whole);
    if (diff <= tol || std::abs(b - a) < 1e-15) {
      result.value += left + right;
      result.error_estimate += diff;
      return;
    }
    if (depth >= max_depth) {
      throw Error(ErrorKind::QuadratureFailure,
                  "tolerance not met on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    panel(a, m, left, 0.5 * tol, depth + 1);
    panel(m, b, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, int initial_panels, int max_depth) {
  if (initial_panels < 1) initial_panels = 1;
  Refiner refiner{f, max_depth, {}};
  const double width = (b - a) / initial_panels;
  for (int k = 0; k < initial_panels; ++k) {
    const double lo = a + k * width;
    const double hi = (k + 1 == initial_panels) ? b : a + (k + 1) * width;
    const double whole = integrate_fixed(f, lo, hi, rule20());
    refiner.result.evaluations += 20;
    refiner.panel(lo, hi, whole, abs_tol / initial_panels, 0);
  }
  return refiner.result;
}

}  // namespace ellipsym::quadrature
