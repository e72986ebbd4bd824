#include "corrcg/random.hpp"

namespace corrcg {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, StreamRole role) {
  std::uint64_t state = seed;
  std::uint64_t key = splitmix64(state);
  state = key ^ index;
  key = splitmix64(state);
  state = key ^ static_cast<std::uint64_t>(role);
  key = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = dist(rng);
  return w;
}

}  // namespace corrcg
