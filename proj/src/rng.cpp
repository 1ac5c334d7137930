#include "ellipsym/rng.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace ellipsym {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t child_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (const std::uint64_t step : path) {
    h = splitmix64(h ^ splitmix64(step + 0x3c6ef372fe94f82bULL));
  }
  return h;
}

Vector uniform_direction(Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(p);
  double norm = 0.0;
  do {
    for (Eigen::Index k = 0; k < p; ++k) v[k] = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

std::vector<Eigen::Index> draw_distinct(Eigen::Index n, Eigen::Index count, Rng& rng) {
  // Floyd's algorithm keeps the cost O(count) regardless of n.
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index j = n - count; j < n; ++j) {
    std::uniform_int_distribution<Eigen::Index> pick(0, j);
    const Eigen::Index t = pick(rng);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace ellipsym
