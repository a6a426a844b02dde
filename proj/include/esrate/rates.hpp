#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "esrate/engine.hpp"
#include "esrate/objectives.hpp"

namespace esrate {

enum class RateSeries { LogDist, LogFHalf };

std::string_view series_name(RateSeries s);
RateSeries parse_series(std::string_view text);

struct RateEstimate {
  double cr_hat = 0.0;  // nats per iteration
  double std_error = 0.0;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  RateSeries series = RateSeries::LogDist;
  int trials_aggregated = 1;
};

struct LineFit {
  double slope;
  double intercept;
  double se_slope;  // from the residual variance
};

//! Ordinary least squares y = intercept + slope * t, at least 3 points.
LineFit fit_line(std::span<const double> t, std::span<const double> y);

//! First index of the regression window [floor((1 - frac) T) + 1, T], widened to
//! the last 10 points when shorter. Throws Unsupported when T + 1 < 10.
std::int64_t window_start(std::int64_t t_final, double window_frac);

//! cr_hat = -slope of log ||m_t - x_opt|| (or log f / 2) over the final window.
RateEstimate estimate_cr(const Trajectory& traj, double window_frac = 0.1,
                         RateSeries series = RateSeries::LogDist);

//! -(1/(frac T)) log(||m_T|| / ||m_{(1-frac)T}||)
RateEstimate two_point_cr(const Trajectory& traj, double window_frac = 0.1);

//! Mean of per-trial rates; std_error is the standard error of that mean.
RateEstimate aggregate_mean(std::span<const RateEstimate> trials);

//! One common slope with per-trial intercepts fitted to every window at once.
RateEstimate aggregate_pooled(std::span<const Trajectory> trajs, double window_frac = 0.1,
                              RateSeries series = RateSeries::LogDist);

//! 1/d, the largest rate any run can sustain.
double lower_rate_bound(std::size_t d);

//! cr_hat Tr(H) / L; Unsupported for non-quadratic objectives.
double scaled_rate(const RateEstimate& est, const ObjectiveSpec& spec);

//! cr_hat d U / L, the class-level normalization usable for any objective.
double scaled_rate_class(const RateEstimate& est, const ObjectiveSpec& spec);

}  // namespace esrate
