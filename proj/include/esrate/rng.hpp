#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace esrate {

/*!
 * Seedable, splittable source of standard normal variates.
 *
 * Every stream is identified by a (seed, stream) pair. The underlying engine
 * is std::mt19937_64 initialized through std::seed_seq with the four 32-bit
 * halves of the pair; both are fully specified by the C++ standard, so the
 * raw 64-bit sequence is identical across standard libraries.
 *
 * Normal variates use the Box-Muller transform on two uniforms
 * u = ((x >> 11) + 0.5) * 2^-53 in (0, 1), emitting the cosine branch first
 * and caching the sine branch for the next call. Results are bit-reproducible
 * for a given libm.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  //! Uniform double in the open interval (0, 1).
  double uniform();

  double normal();

  void fill_normal(std::span<double> out);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

//! Mix a base seed with two indices (e.g. grid cell and trial) into a new
//! 64-bit seed. Order-independent of scheduling, stable across runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace esrate
