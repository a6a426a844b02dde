#include "esrate/rates.hpp"

#include <cmath>
#include <numeric>

#include "esrate/error.hpp"

namespace esrate {

std::string_view series_name(RateSeries s) {
  return s == RateSeries::LogFHalf ? "log_f_half" : "log_dist";
}

RateSeries parse_series(std::string_view text) {
  if (text == "log_dist") return RateSeries::LogDist;
  if (text == "log_f_half") return RateSeries::LogFHalf;
  throw InvalidInput("unknown series '" + std::string(text) + "' (log_dist|log_f_half)");
}

LineFit fit_line(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw InvalidInput("fit_line: size mismatch");
  const std::size_t n = t.size();
  if (n < 3) throw Unsupported("fit_line needs at least 3 points");
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n);
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (t[i] - tm) * (t[i] - tm);
    sxy += (t[i] - tm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw Unsupported("fit_line: abscissae are all equal");
  const double slope = sxy / sxx;
  const double intercept = ym - slope * tm;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - intercept - slope * t[i];
    ssr += r * r;
  }
  return {slope, intercept, std::sqrt(ssr / static_cast<double>(n - 2) / sxx)};
}

std::int64_t window_start(std::int64_t t_final, double window_frac) {
  if (!(window_frac > 0.0 && window_frac < 1.0)) throw InvalidInput("window_frac must lie in (0, 1)");
  if (t_final + 1 < 10) throw Unsupported("trajectory too short for a 10-point regression window");
  auto start = static_cast<std::int64_t>(std::floor((1.0 - window_frac) * static_cast<double>(t_final))) + 1;
  if (t_final - start + 1 < 10) start = t_final - 9;
  return start;
}

namespace {

double series_value(const TrajectoryPoint& p, RateSeries s) {
  return s == RateSeries::LogFHalf ? 0.5 * p.log_f : p.log_dist;
}

void window_series(const Trajectory& traj, std::int64_t start, RateSeries series,
                   std::vector<double>& t, std::vector<double>& y) {
  t.clear();
  y.clear();
  for (std::int64_t i = start; i <= traj.t_final; ++i) {
    const auto& p = traj.points[static_cast<std::size_t>(i)];
    const double v = series_value(p, series);
    if (!std::isfinite(v)) throw Unsupported("trajectory reached the optimum inside the window");
    t.push_back(static_cast<double>(p.t));
    y.push_back(v);
  }
}

void check_traj(const Trajectory& traj) {
  if (traj.points.size() != static_cast<std::size_t>(traj.t_final) + 1) {
    throw InvalidInput("trajectory must hold every point from t = 0 to t_final");
  }
}

}  // namespace

RateEstimate estimate_cr(const Trajectory& traj, double window_frac, RateSeries series) {
  check_traj(traj);
  const std::int64_t start = window_start(traj.t_final, window_frac);
  std::vector<double> t;
  std::vector<double> y;
  window_series(traj, start, series, t, y);
  const LineFit fit = fit_line(t, y);
  return {-fit.slope, fit.se_slope, start, traj.t_final, series, 1};
}

RateEstimate two_point_cr(const Trajectory& traj, double window_frac) {
  check_traj(traj);
  const std::int64_t start = window_start(traj.t_final, window_frac) - 1;
  const auto& a = traj.points[static_cast<std::size_t>(start)];
  const auto& b = traj.points[static_cast<std::size_t>(traj.t_final)];
  const double cr = -(b.log_dist - a.log_dist) / static_cast<double>(b.t - a.t);
  return {cr, 0.0, start, traj.t_final, RateSeries::LogDist, 1};
}

RateEstimate aggregate_mean(std::span<const RateEstimate> trials) {
  if (trials.empty()) throw InvalidInput("nothing to aggregate");
  const double k = static_cast<double>(trials.size());
  double mean = 0.0;
  for (const auto& r : trials) mean += r.cr_hat;
  mean /= k;
  RateEstimate out = trials.front();
  out.cr_hat = mean;
  out.trials_aggregated = static_cast<int>(trials.size());
  if (trials.size() == 1) return out;
  double ss = 0.0;
  for (const auto& r : trials) ss += (r.cr_hat - mean) * (r.cr_hat - mean);
  out.std_error = std::sqrt(ss / (k - 1.0) / k);
  return out;
}

RateEstimate aggregate_pooled(std::span<const Trajectory> trajs, double window_frac,
                              RateSeries series) {
  if (trajs.empty()) throw InvalidInput("nothing to aggregate");
  double sxx = 0.0;
  double sxy = 0.0;
  std::size_t points = 0;
  std::vector<std::vector<double>> ts;
  std::vector<std::vector<double>> ys;
  std::vector<double> tm;
  std::vector<double> ym;
  for (const auto& traj : trajs) {
    check_traj(traj);
    std::vector<double> t;
    std::vector<double> y;
    window_series(traj, window_start(traj.t_final, window_frac), series, t, y);
    const double n = static_cast<double>(t.size());
    const double a = std::accumulate(t.begin(), t.end(), 0.0) / n;
    const double b = std::accumulate(y.begin(), y.end(), 0.0) / n;
    for (std::size_t i = 0; i < t.size(); ++i) {
      sxx += (t[i] - a) * (t[i] - a);
      sxy += (t[i] - a) * (y[i] - b);
    }
    points += t.size();
    ts.push_back(std::move(t));
    ys.push_back(std::move(y));
    tm.push_back(a);
    ym.push_back(b);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    for (std::size_t i = 0; i < ts[k].size(); ++i) {
      const double r = ys[k][i] - ym[k] - slope * (ts[k][i] - tm[k]);
      ssr += r * r;
    }
  }
  const double dof = static_cast<double>(points) - static_cast<double>(trajs.size()) - 1.0;
  RateEstimate out;
  out.cr_hat = -slope;
  out.std_error = dof > 0.0 ? std::sqrt(ssr / dof / sxx) : 0.0;
  out.t_start = static_cast<std::int64_t>(ts.front().front());
  out.t_end = static_cast<std::int64_t>(ts.front().back());
  out.series = series;
  out.trials_aggregated = static_cast<int>(trajs.size());
  return out;
}

double lower_rate_bound(std::size_t d) {
  if (d < 1) throw InvalidInput("dimension must be >= 1");
  return 1.0 / static_cast<double>(d);
}

double scaled_rate(const RateEstimate& est, const ObjectiveSpec& spec) {
  const ObjectiveSpec& base = spec.canonical();
  const auto tr = base.trace_hessian();
  if (!tr) throw Unsupported("scaled_rate needs a quadratic objective; use scaled_rate_class");
  return est.cr_hat * *tr / base.strong_convexity();
}

double scaled_rate_class(const RateEstimate& est, const ObjectiveSpec& spec) {
  const ObjectiveSpec& base = spec.canonical();
  return est.cr_hat * static_cast<double>(base.dim()) * base.smoothness() / base.strong_convexity();
}

}  // namespace esrate
