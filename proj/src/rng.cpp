#include "debias/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

#include "debias/error.hpp"

namespace debias {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t step : path) h = splitmix64(h ^ splitmix64(step));
  return h;
}

Engine make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(master, path));
}

std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform_below: bound must be positive");
  // Values below `threshold` would bias the modulo.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

double uniform_unit(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Engine& rng) {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void partial_shuffle(std::span<std::size_t> indices, std::size_t count, Engine& rng) {
  const std::size_t n = indices.size();
  if (count > n) throw InvalidArgument("partial_shuffle: count exceeds size");
  for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(indices[i], indices[j]);
  }
}

std::vector<std::size_t> sample_prefix(std::size_t n, std::size_t count, Engine& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  partial_shuffle(idx, count, rng);
  return idx;
}

}  // namespace debias
