#include "landscape/random.hpp"

#include <vector>

namespace landscape {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_generator(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
  std::vector<std::uint32_t> words;
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(state);
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * normal(rng);
  return m;
}

}  // namespace landscape
