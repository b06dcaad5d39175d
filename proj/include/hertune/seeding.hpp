#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hertune {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed fan-out. Each path element is folded into the running
// hash with splitmix64, so derive_seed(s, {a, b}) is stable across runs and
// independent of thread scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Stream tags used by the harness when splitting a master run seed.
namespace stream {
inline constexpr std::uint64_t kAgentInit = 1;
inline constexpr std::uint64_t kExploration = 2;
inline constexpr std::uint64_t kEvaluation = 3;
inline constexpr std::uint64_t kGeneticAlgorithm = 4;
inline constexpr std::uint64_t kFitness = 5;
inline constexpr std::uint64_t kComparison = 6;
}  // namespace stream

}  // namespace hertune
