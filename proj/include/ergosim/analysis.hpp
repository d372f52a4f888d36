#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergosim {

/// Ensemble of one observable sampled on a shared time grid:
/// values[r][i] = realization r at times[i].
struct EnsembleSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  std::size_t num_realizations() const { return values.size(); }
  std::size_t num_times() const { return times.size(); }

  void check_shape() const {
    for (const auto& row : values)
      if (row.size() != times.size())
        throw std::invalid_argument("EnsembleSeries: ragged realization row");
  }

  double mean(std::size_t i) const {
    double s = 0.0;
    for (const auto& row : values) s += row[i];
    return s / static_cast<double>(values.size());
  }

  double stderr_mean(std::size_t i) const {
    const std::size_t r = values.size();
    if (r < 2) return 0.0;
    const double m = mean(i);
    double ss = 0.0;
    for (const auto& row : values) ss += (row[i] - m) * (row[i] - m);
    return std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r));
  }

  /// Percentile with linear interpolation between order statistics.
  double percentile(double q, std::size_t i) const {
    std::vector<double> col(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) col[r] = values[r][i];
    std::sort(col.begin(), col.end());
    if (col.size() == 1) return col[0];
    const double pos = q / 100.0 * static_cast<double>(col.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, col.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * col[lo] + w * col[hi];
  }

  std::vector<double> means() const {
    std::vector<double> m(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) m[i] = mean(i);
    return m;
  }
  std::vector<double> stderrs() const {
    std::vector<double> s(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) s[i] = stderr_mean(i);
    return s;
  }
};

/// Time-and-ensemble average over a window. The standard error treats each
/// realization's window average as one independent sample (points within a
/// trajectory are time-correlated).
struct WindowAverage {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t num_points = 0;
};

inline WindowAverage long_time_average(const EnsembleSeries& series, double t_lo,
                                       double t_hi) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < series.times.size(); ++i)
    if (series.times[i] >= t_lo && series.times[i] <= t_hi) idx.push_back(i);
  if (idx.empty())
    throw std::invalid_argument("long_time_average: window not covered by grid");
  std::vector<double> per_real(series.num_realizations());
  for (std::size_t r = 0; r < series.num_realizations(); ++r) {
    double s = 0.0;
    for (std::size_t i : idx) s += series.values[r][i];
    per_real[r] = s / static_cast<double>(idx.size());
  }
  WindowAverage out;
  out.num_points = idx.size();
  for (double v : per_real) out.value += v;
  out.value /= static_cast<double>(per_real.size());
  if (per_real.size() > 1) {
    double ss = 0.0;
    for (double v : per_real) ss += (v - out.value) * (v - out.value);
    out.std_error = std::sqrt(ss / static_cast<double>(per_real.size() - 1) /
                              static_cast<double>(per_real.size()));
  }
  return out;
}

/// Delta(t) = reference - value(t), elementwise on the same grid.
inline EnsembleSeries deviation_series(const EnsembleSeries& series,
                                       double reference) {
  EnsembleSeries out;
  out.times = series.times;
  out.values.reserve(series.values.size());
  for (const auto& row : series.values) {
    std::vector<double> d(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) d[i] = reference - row[i];
    out.values.push_back(std::move(d));
  }
  return out;
}

enum class FitModel { exponential, power_law };

inline const char* to_string(FitModel m) {
  return m == FitModel::exponential ? "exponential" : "power_law";
}

/// Least-squares fit of a decay law on a (time, delta) window.
/// exponential: delta = A e^{-alpha t}  (linear fit of ln delta vs t)
/// power_law:   delta = a t^{-beta}     (linear fit of ln delta vs ln t)
struct FitResult {
  FitModel model = FitModel::exponential;
  double amplitude = 0.0;          // A or a
  double rate_or_exponent = 0.0;   // alpha or beta
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual_rms = 0.0;       // in log space
  double amplitude_std_error = 0.0;
  double rate_std_error = 0.0;
  std::size_t num_points = 0;
};

namespace detail {

struct LinFit {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0, intercept_se = 0.0,
         resid_rms = 0.0;
};

inline LinFit linear_least_squares(std::span<const double> x,
                                   std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear fit: degenerate abscissa");
  LinFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  f.resid_rms = std::sqrt(rss / static_cast<double>(n));
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) +
                                     mx * mx / sxx));
  }
  return f;
}

inline FitResult fit_decay(std::span<const double> times,
                           std::span<const double> deltas, double t_lo,
                           double t_hi, FitModel model) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < t_lo || t > t_hi) continue;
    if (deltas[i] <= 0.0)
      throw std::invalid_argument(
          "fit window contains nonpositive delta; shrink the window");
    if (model == FitModel::power_law && t <= 0.0)
      throw std::invalid_argument("power-law fit window must have t > 0");
    x.push_back(model == FitModel::exponential ? t : std::log(t));
    y.push_back(std::log(deltas[i]));
  }
  if (x.size() < 3)
    throw std::invalid_argument("fit window has fewer than 3 points");
  const LinFit f = linear_least_squares(x, y);
  FitResult out;
  out.model = model;
  out.amplitude = std::exp(f.intercept);
  out.rate_or_exponent = -f.slope;
  out.window_lo = t_lo;
  out.window_hi = t_hi;
  out.residual_rms = f.resid_rms;
  out.amplitude_std_error = out.amplitude * f.intercept_se;
  out.rate_std_error = f.slope_se;
  out.num_points = x.size();
  return out;
}

}  // namespace detail

inline FitResult fit_exponential(std::span<const double> times,
                                 std::span<const double> deltas, double t_lo,
                                 double t_hi) {
  return detail::fit_decay(times, deltas, t_lo, t_hi, FitModel::exponential);
}

inline FitResult fit_powerlaw(std::span<const double> times,
                              std::span<const double> deltas, double t_lo,
                              double t_hi) {
  return detail::fit_decay(times, deltas, t_lo, t_hi, FitModel::power_law);
}

/// Data-driven end of a fit window: the last usable time before the mean
/// deviation first drops below 3x its standard error (or goes nonpositive).
inline double fit_window_end(std::span<const double> times,
                             std::span<const double> deltas,
                             std::span<const double> stderrs, double t_lo) {
  double end = t_lo;
  bool started = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo) continue;
    if (deltas[i] <= 0.0 || deltas[i] < 3.0 * stderrs[i]) break;
    end = times[i];
    started = true;
  }
  if (!started)
    throw std::invalid_argument("fit_window_end: no usable points past t_lo");
  return end;
}

/// First sampled time after which the deviation stays below epsilon for
/// `persistence` consecutive samples. Undefined (not an error) when the
/// series never satisfies the rule.
struct SaturationResult {
  double epsilon = 0.0;
  double t_sat = 0.0;
  int persistence_window = 5;
  bool defined = false;
};

inline SaturationResult saturation_time(std::span<const double> times,
                                        std::span<const double> deltas,
                                        double epsilon, int persistence = 5) {
  if (epsilon <= 0.0) throw std::invalid_argument("saturation_time: epsilon > 0");
  SaturationResult out;
  out.epsilon = epsilon;
  out.persistence_window = persistence;
  const std::size_t n = times.size();
  std::size_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    run = (deltas[i] < epsilon) ? run + 1 : 0;
    if (run >= static_cast<std::size_t>(persistence)) {
      out.defined = true;
      out.t_sat = times[i - static_cast<std::size_t>(persistence) + 1];
      return out;
    }
  }
  return out;
}

/// Saturation-time scaling across system sizes: fits both t_sat = c1 log2 N +
/// c0 and t_sat = c1 N + c0 and reports both residuals (no automatic winner).
struct ScalingFit {
  double log_slope = 0.0, log_intercept = 0.0, log_residual_rms = 0.0;
  double linear_slope = 0.0, linear_intercept = 0.0, linear_residual_rms = 0.0;
};

inline ScalingFit scaling_fit(const std::map<int, double>& t_sat_by_size) {
  if (t_sat_by_size.size() < 4)
    throw std::invalid_argument("scaling_fit: need >= 4 system sizes");
  std::vector<double> n, logn, t;
  for (const auto& [size, tsat] : t_sat_by_size) {
    n.push_back(static_cast<double>(size));
    logn.push_back(std::log2(static_cast<double>(size)));
    t.push_back(tsat);
  }
  const auto lg = detail::linear_least_squares(logn, t);
  const auto ln = detail::linear_least_squares(n, t);
  ScalingFit out;
  out.log_slope = lg.slope;
  out.log_intercept = lg.intercept;
  out.log_residual_rms = lg.resid_rms;
  out.linear_slope = ln.slope;
  out.linear_intercept = ln.intercept;
  out.linear_residual_rms = ln.resid_rms;
  return out;
}

}  // namespace ergosim
