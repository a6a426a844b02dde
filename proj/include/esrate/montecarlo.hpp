#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "esrate/moments.hpp"
#include "esrate/objectives.hpp"
#include "esrate/parallel.hpp"
#include "esrate/rng.hpp"

namespace esrate {

//! Samples per chunk; chunk k draws from RandomStream(seed, k).
inline constexpr std::int64_t kChunkSize = 65536;

/*!
 * Accumulates sample(z, scratch) over n standard normal vectors in R^d.
 * Chunks run in parallel and merge in chunk order, so the result depends on
 * (n, seed) only. sample must be safe to call concurrently.
 */
template <std::size_t N, class Sample>
Moments<N> monte_carlo(std::int64_t n, std::uint64_t seed, std::size_t d, const Sample& sample) {
  const std::int64_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<Moments<N>> parts(static_cast<std::size_t>(chunks));
  parallel_for(parts.size(), [&](std::size_t k) {
    RandomStream rng(seed, k);
    Vector z(d);
    Vector scratch(d);
    const std::int64_t begin = static_cast<std::int64_t>(k) * kChunkSize;
    const std::int64_t end = std::min(n, begin + kChunkSize);
    for (std::int64_t i = begin; i < end; ++i) {
      rng.fill_normal(z);
      parts[k].add(sample(z, scratch));
    }
  });
  Moments<N> total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

}  // namespace esrate
