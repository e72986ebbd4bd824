#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace corrcg {

enum class StreamRole : std::uint64_t { Background = 1, Observation = 2, Auxiliary = 3 };

/// Independent generator for (seed, index, role), seeded through splitmix64 so
/// neighbouring indices give unrelated streams.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, StreamRole role);

Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index n);

}  // namespace corrcg
