#pragma once
// Seeded generators. Every consumer derives its own mt19937_64 from a
// (seed, stream) pair so results do not depend on scheduling.

#include <cstdint>
#include <random>

#include "landscape/matrix.hpp"

namespace landscape {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

std::mt19937_64 make_generator(std::uint64_t seed, std::uint64_t stream = 0);

/// Independent N(0, scale²) entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0);

}  // namespace landscape
