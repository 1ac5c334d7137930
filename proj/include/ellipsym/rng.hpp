#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "ellipsym/linalg.hpp"

namespace ellipsym {

using Rng = std::mt19937_64;

/// Mixes a master seed with a path of indices into a child seed. Child
/// streams depend only on (seed, path), never on the order in which they
/// are requested, so parallel schedules cannot change any draw.
std::uint64_t child_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng(child_seed(seed, path));
}

/// Uniform direction on the unit sphere S_{p-1} (normalised Gaussian vector).
Vector uniform_direction(Eigen::Index p, Rng& rng);

/// Draws `count` distinct indices from [0, n) (partial Fisher-Yates).
std::vector<Eigen::Index> draw_distinct(Eigen::Index n, Eigen::Index count, Rng& rng);

}  // namespace ellipsym
