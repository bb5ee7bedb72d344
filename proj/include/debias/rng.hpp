#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace debias {

// Every sampling decision in the toolkit draws from a std::mt19937_64 engine
// whose seed is derived from the master seed and a path of stream indices via
// splitmix64 mixing. Bounded integers, uniform reals and normals are computed
// here (not through <random> distributions, whose outputs differ between
// standard libraries) so that results are portable.
inline constexpr std::string_view kPrngFamily = "mt19937_64+splitmix64-streams";
inline constexpr int kPrngVersion = 1;

using Engine = std::mt19937_64;

// Stream purposes; used as the first index of a derivation path.
enum class Stream : std::uint64_t {
  kPools = 1,
  kSubsample = 2,
  kPartition = 3,
  kRandomReduce = 4,
  kSynthetic = 5,
  kProbe = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

Engine make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Uniform integer in [0, bound) by rejection; bound must be > 0.
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound);

// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(Engine& rng);

// Standard normal via Box-Muller (one value per call, no caching).
double standard_normal(Engine& rng);

// Moves a uniformly chosen `count`-subset of `indices` to its front
// (partial Fisher-Yates). Positions past `count` are left in swap order.
void partial_shuffle(std::span<std::size_t> indices, std::size_t count, Engine& rng);

// Identity permutation of [0, n) with the first `count` positions shuffled.
std::vector<std::size_t> sample_prefix(std::size_t n, std::size_t count, Engine& rng);

}  // namespace debias
