#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ellipsym::quadrature {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int points);

/// Fixed rule applied to [a, b].
double integrate_fixed(const std::function<double(double)>& f, double a, double b,
                       const GaussLegendreRule& rule);

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Legendre integration. [a, b] is first cut into
/// `initial_panels` equal panels; each panel is bisected until the
/// 20-point rule on the panel and on its two halves agree within the
/// panel's share of `abs_tol`. Throws QuadratureFailure past `max_depth`.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, int initial_panels = 1, int max_depth = 40);

}  // namespace ellipsym::quadrature
