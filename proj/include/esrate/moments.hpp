#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace esrate {

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
};

/*!
 * Streaming means and co-moments of an N-variate sample (Welford update,
 * Chan et al. pairwise merge). Merging is associative up to rounding, so a
 * fixed merge order gives bit-stable results.
 */
template <std::size_t N>
class Moments {
 public:
  using Row = std::array<double, N>;

  void add(const Row& x) {
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    Row delta{};
    for (std::size_t i = 0; i < N; ++i) {
      delta[i] = x[i] - mean_[i];
      mean_[i] += delta[i] * inv;
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) co_[i][j] += delta[i] * (x[j] - mean_[j]);
    }
  }

  void merge(const Moments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    Row delta{};
    for (std::size_t i = 0; i < N; ++i) delta[i] = other.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        co_[i][j] += other.co_[i][j] + delta[i] * delta[j] * na * nb / n;
      }
    }
    for (std::size_t i = 0; i < N; ++i) mean_[i] += delta[i] * nb / n;
    n_ += other.n_;
  }

  std::int64_t count() const { return n_; }
  double mean(std::size_t i) const { return mean_[i]; }
  //! Unbiased sample covariance.
  double covariance(std::size_t i, std::size_t j) const {
    return n_ > 1 ? co_[i][j] / static_cast<double>(n_ - 1) : 0.0;
  }
  double variance(std::size_t i) const { return covariance(i, i); }
  double se_mean(std::size_t i) const {
    return n_ > 0 ? std::sqrt(variance(i) / static_cast<double>(n_)) : 0.0;
  }
  //! Delta-method standard error of a smooth function of the means with gradient g.
  double se_linear(const Row& g) const {
    if (n_ == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) s += g[i] * g[j] * covariance(i, j);
    }
    return std::sqrt(std::max(s, 0.0) / static_cast<double>(n_));
  }

 private:
  std::int64_t n_ = 0;
  Row mean_{};
  std::array<Row, N> co_{};
};

}  // namespace esrate
