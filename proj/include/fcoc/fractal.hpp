#pragma once

// Overlapping-window asymmetric multifractal detrended cross-correlation
// analysis and the rolling Hurst features built on it.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fcoc/error.hpp"
#include "fcoc/numerics.hpp"

namespace fcoc::fractal {

struct FractalConfig {
  double overlap_ratio = 1.0 / 3.0;
  std::size_t detrend_order = 2;
  double q = 2.0;
  std::vector<std::size_t> scales;
  std::size_t min_directional_segments = 4;

  /// Checks the configuration against a series of length n.
  void validate(std::size_t n) const {
    if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0))
      throw Error(ErrorCode::InvalidConfig, "overlap ratio must lie in [0, 1)");
    if (detrend_order < 1) throw Error(ErrorCode::InvalidConfig, "detrend order must be positive");
    if (!std::isfinite(q)) throw Error(ErrorCode::InvalidConfig, "q must be finite");
    if (min_directional_segments < 1)
      throw Error(ErrorCode::InvalidConfig, "min_directional_segments must be positive");
    if (scales.size() < 2) throw Error(ErrorCode::InsufficientScales, "at least 2 scales are required");
    for (std::size_t i = 0; i < scales.size(); ++i) {
      if (scales[i] < detrend_order + 2)
        throw Error(ErrorCode::InvalidConfig,
                    "scale " + std::to_string(scales[i]) + " is too short for detrend order " +
                        std::to_string(detrend_order));
      if (i > 0 && scales[i] <= scales[i - 1])
        throw Error(ErrorCode::InvalidConfig, "scales must be strictly increasing");
    }
    if (scales.back() > n)
      throw Error(ErrorCode::ScaleTooLarge,
                  "largest scale " + std::to_string(scales.back()) + " exceeds series length " + std::to_string(n));
  }
};

/// Roughly `count` logarithmically spaced integer scales in [s_min, s_max],
/// rounded and deduplicated.
inline std::vector<std::size_t> log_scales(std::size_t s_min, std::size_t s_max, std::size_t count = 15) {
  if (s_min < 2 || s_max < s_min || count < 2)
    throw Error(ErrorCode::InvalidConfig,
                "cannot build scale grid from " + std::to_string(s_min) + " to " + std::to_string(s_max));
  std::vector<std::size_t> out;
  const double lo = std::log(static_cast<double>(s_min));
  const double hi = std::log(static_cast<double>(s_max));
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const auto s = static_cast<std::size_t>(std::llround(std::exp(lo + t * (hi - lo))));
    if (out.empty() || s > out.back()) out.push_back(s);
  }
  return out;
}

/// Default grid for a window of length T: 16 .. floor(T/4).
inline std::vector<std::size_t> default_scales(std::size_t window) { return log_scales(16, window / 4); }

inline std::vector<double> build_profile(std::span<const double> series) {
  if (series.size() < 2) throw Error(ErrorCode::TooShort, "profile needs at least 2 observations");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  std::vector<double> profile(series.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    acc += series[k] - mean;
    profile[k] = acc;
  }
  return profile;
}

struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentSpec {
  std::size_t start = 0;
  std::size_t length = 0;
  double trend_slope = 0.0;
  int trend_sign = 0;
};

/// Stride between consecutive windows of size s at overlap ratio rho.
inline std::size_t overlap_stride(std::size_t s, double rho) {
  const auto step = static_cast<std::size_t>(std::floor(static_cast<double>(s) * (1.0 - rho) + 0.5));
  return std::max<std::size_t>(step, 1);
}

inline std::vector<Segment> segment_overlapping(std::size_t n, std::size_t s, double rho) {
  if (s > n)
    throw Error(ErrorCode::ScaleTooLarge, "scale " + std::to_string(s) + " exceeds length " + std::to_string(n));
  if (s == 0) throw Error(ErrorCode::InvalidConfig, "scale must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidConfig, "overlap ratio must lie in [0, 1)");
  const std::size_t step = overlap_stride(s, rho);
  const std::size_t count = (n - s) / step + 1;
  std::vector<Segment> segments;
  segments.reserve(count);
  for (std::size_t j = 0; j < count; ++j) segments.push_back({j * step, s});
  return segments;
}

/// Mean absolute product of the order-m detrending residuals of two profile
/// segments, fitted on the local abscissa 0..s-1.
inline double segment_fluctuation(std::span<const double> px_seg, std::span<const double> py_seg, std::size_t m) {
  if (px_seg.size() != py_seg.size())
    throw Error(ErrorCode::LengthMismatch, "segment_fluctuation: profile segments differ in length");
  const std::size_t s = px_seg.size();
  if (s < m + 2)
    throw Error(ErrorCode::DegenerateDesign,
                "segment of length " + std::to_string(s) + " too short for order " + std::to_string(m));
  std::vector<double> xs(s);
  for (std::size_t i = 0; i < s; ++i) xs[i] = static_cast<double>(i);
  const auto fx = numerics::polyfit(xs, px_seg, m);
  const auto fy = numerics::polyfit(xs, py_seg, m);
  double acc = 0.0;
  for (std::size_t i = 0; i < s; ++i) acc += std::abs((px_seg[i] - fx(xs[i])) * (py_seg[i] - fy(xs[i])));
  return acc / static_cast<double>(s);
}

struct FluctuationRow {
  std::size_t scale = 0;
  double f_all = 0.0;
  std::optional<double> f_pos;
  std::optional<double> f_neg;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_seg = 0;

  friend bool operator==(const FluctuationRow&, const FluctuationRow&) = default;
};

namespace detail {

// q-order average of squared fluctuations. Zero members contribute 0 for
// q > 0 and are skipped (count excluded) for q <= 0. Empty -> nullopt.
inline std::optional<double> q_average(std::span<const double> f2, double q) {
  double acc = 0.0;
  std::size_t count = 0;
  if (q == 0.0) {
    for (double v : f2) {
      if (v > 0.0) {
        acc += std::log(v);
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return std::exp(acc / (2.0 * static_cast<double>(count)));
  }
  for (double v : f2) {
    if (v > 0.0) {
      acc += std::pow(v, q / 2.0);
      ++count;
    } else if (q > 0.0) {
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  const double value = std::pow(acc / static_cast<double>(count), 1.0 / q);
  if (!(value > 0.0) || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

/// Per-segment trend slopes of the proxy series.
inline std::vector<SegmentSpec> segment_trends(std::span<const double> trend_proxy, std::span<const Segment> segments) {
  std::vector<SegmentSpec> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    const double beta = numerics::linear_trend_slope(trend_proxy.subspan(seg.start, seg.length));
    out.push_back({seg.start, seg.length, beta, detail::sign_of(beta)});
  }
  return out;
}

/// Overall and trend-conditioned fluctuation functions at one scale.
///
/// Segments whose proxy slope is exactly zero enter f_all only. A direction
/// with fewer than cfg.min_directional_segments members is reported absent.
inline FluctuationRow directional_fluctuations(std::span<const double> px, std::span<const double> py,
                                               std::span<const double> trend_proxy, const FractalConfig& cfg,
                                               std::size_t s) {
  if (px.size() != py.size() || px.size() != trend_proxy.size())
    throw Error(ErrorCode::LengthMismatch, "profiles and trend proxy must share one length");
  const auto segments = segment_overlapping(px.size(), s, cfg.overlap_ratio);
  const auto trends = segment_trends(trend_proxy, segments);

  std::vector<double> all;
  std::vector<double> pos;
  std::vector<double> neg;
  all.reserve(segments.size());
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& seg = segments[j];
    const double f2 =
        segment_fluctuation(px.subspan(seg.start, seg.length), py.subspan(seg.start, seg.length), cfg.detrend_order);
    all.push_back(f2);
    if (trends[j].trend_sign > 0) pos.push_back(f2);
    if (trends[j].trend_sign < 0) neg.push_back(f2);
  }

  FluctuationRow row;
  row.scale = s;
  row.n_seg = segments.size();
  row.n_pos = pos.size();
  row.n_neg = neg.size();
  if (std::all_of(all.begin(), all.end(), [](double v) { return v == 0.0; }))
    throw Error(ErrorCode::AllZeroFluctuations, "every segment at scale " + std::to_string(s) + " has zero fluctuation");
  const auto f_all = detail::q_average(all, cfg.q);
  if (!f_all) throw Error(ErrorCode::AllZeroFluctuations, "no usable segment at scale " + std::to_string(s));
  row.f_all = *f_all;
  if (row.n_pos >= cfg.min_directional_segments) row.f_pos = detail::q_average(pos, cfg.q);
  if (row.n_neg >= cfg.min_directional_segments) row.f_neg = detail::q_average(neg, cfg.q);
  return row;
}

/// Fluctuation rows for every configured scale. The first series is the
/// trend proxy.
inline std::vector<FluctuationRow> fluctuation_rows(std::span<const double> rx, std::span<const double> ry,
                                                    const FractalConfig& cfg) {
  if (rx.size() != ry.size()) throw Error(ErrorCode::LengthMismatch, "rx and ry must have equal length");
  cfg.validate(rx.size());
  const auto px = build_profile(rx);
  const auto py = build_profile(ry);
  std::vector<FluctuationRow> rows;
  rows.reserve(cfg.scales.size());
  for (std::size_t s : cfg.scales) rows.push_back(directional_fluctuations(px, py, rx, cfg, s));
  return rows;
}

struct HurstTriple {
  double h_overall = 0.0;
  double h_positive = 0.0;
  double h_negative = 0.0;
  numerics::ScalingFit fit_overall;
  numerics::ScalingFit fit_positive;
  numerics::ScalingFit fit_negative;

  double asymmetry() const { return h_positive - h_negative; }
};

/// Per-exponent outcome; a direction may fail while the overall fit succeeds.
struct HurstEstimate {
  std::optional<numerics::ScalingFit> overall;
  std::optional<numerics::ScalingFit> positive;
  std::optional<numerics::ScalingFit> negative;
};

inline constexpr double kHurstLow = -0.5;
inline constexpr double kHurstHigh = 2.0;

namespace detail {

enum class Direction { All, Pos, Neg };

struct ScalePoints {
  std::vector<double> sizes;
  std::vector<double> values;
};

inline ScalePoints collect(std::span<const FluctuationRow> rows, Direction dir) {
  ScalePoints pts;
  for (const auto& row : rows) {
    const std::optional<double> v = dir == Direction::All ? std::optional<double>(row.f_all)
                                    : dir == Direction::Pos ? row.f_pos
                                                            : row.f_neg;
    if (v && *v > 0.0) {
      pts.sizes.push_back(static_cast<double>(row.scale));
      pts.values.push_back(*v);
    }
  }
  return pts;
}

inline bool plausible(const numerics::ScalingFit& fit) {
  return std::isfinite(fit.slope) && fit.slope >= kHurstLow && fit.slope <= kHurstHigh;
}

inline std::optional<numerics::ScalingFit> fit_direction(std::span<const FluctuationRow> rows, Direction dir) {
  const auto pts = collect(rows, dir);
  if (pts.sizes.size() < 2) return std::nullopt;
  auto fit = numerics::loglog_fit(pts.sizes, pts.values);
  if (!plausible(fit)) return std::nullopt;
  return fit;
}

}  // namespace detail

/// Non-throwing scaling fits over precomputed rows.
inline HurstEstimate estimate_hurst(std::span<const FluctuationRow> rows) {
  return {detail::fit_direction(rows, detail::Direction::All), detail::fit_direction(rows, detail::Direction::Pos),
          detail::fit_direction(rows, detail::Direction::Neg)};
}

/// Overall, up-trend and down-trend generalized Hurst exponents of (rx, ry).
/// rx doubles as the local trend proxy.
inline HurstTriple mf_adcca(std::span<const double> rx, std::span<const double> ry, const FractalConfig& cfg) {
  if (rx.size() < cfg.scales.back() + 1)
    throw Error(ErrorCode::TooShort, "series must be longer than the largest scale");
  const auto rows = fluctuation_rows(rx, ry, cfg);

  auto require = [&](detail::Direction dir, const char* name) {
    const auto pts = detail::collect(rows, dir);
    if (pts.sizes.size() < 2)
      throw Error(ErrorCode::InsufficientScales, std::string("fewer than 2 usable scales for the ") + name + " exponent");
    const auto fit = numerics::loglog_fit(pts.sizes, pts.values);
    if (!detail::plausible(fit))
      throw Error(ErrorCode::ImplausibleExponent,
                  std::string(name) + " exponent " + std::to_string(fit.slope) + " outside [-0.5, 2]");
    return fit;
  };

  HurstTriple out;
  out.fit_overall = require(detail::Direction::All, "overall");
  out.fit_positive = require(detail::Direction::Pos, "positive");
  out.fit_negative = require(detail::Direction::Neg, "negative");
  out.h_overall = out.fit_overall.slope;
  out.h_positive = out.fit_positive.slope;
  out.h_negative = out.fit_negative.slope;
  return out;
}

/// Number of rolling windows of length T advanced by k over n points.
inline std::size_t window_count(std::size_t n, std::size_t window, std::size_t stride) {
  if (stride == 0) throw Error(ErrorCode::InvalidConfig, "window stride must be at least 1");
  if (window == 0 || window > n) return 0;
  return (n - window) / stride + 1;
}

/// Rolling exponents; entry i belongs to the window [i*k, i*k + T) and is
/// stamped with that window's last index. Failed estimates stay empty.
struct RollingHurst {
  std::size_t window = 0;
  std::size_t stride = 1;
  std::vector<std::optional<double>> overall;
  std::vector<std::optional<double>> positive;
  std::vector<std::optional<double>> negative;

  std::size_t size() const { return overall.size(); }
  std::size_t end_index(std::size_t i) const { return i * stride + window - 1; }
};

inline RollingHurst rolling_hurst_features(std::span<const double> rx, std::span<const double> ry, std::size_t window,
                                           std::size_t stride, const FractalConfig& cfg, unsigned threads = 0) {
  if (rx.size() != ry.size()) throw Error(ErrorCode::LengthMismatch, "rx and ry must have equal length");
  if (window > rx.size())
    throw Error(ErrorCode::TooShort,
                "window " + std::to_string(window) + " exceeds series length " + std::to_string(rx.size()));
  cfg.validate(window);
  if (window < cfg.scales.back() + 1) throw Error(ErrorCode::InvalidConfig, "window must exceed the largest scale");

  RollingHurst out;
  out.window = window;
  out.stride = stride;
  const std::size_t count = window_count(rx.size(), window, stride);
  out.overall.resize(count);
  out.positive.resize(count);
  out.negative.resize(count);

  auto evaluate = [&](std::size_t i) {
    const std::size_t start = i * stride;
    try {
      const auto rows = fluctuation_rows(rx.subspan(start, window), ry.subspan(start, window), cfg);
      const auto est = estimate_hurst(rows);
      if (est.overall) out.overall[i] = est.overall->slope;
      if (est.positive) out.positive[i] = est.positive->slope;
      if (est.negative) out.negative[i] = est.negative->slope;
    } catch (const Error&) {
      // leave the window missing
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) evaluate(i);
    return out;
  }
  // each window writes only its own slot, so results do not depend on scheduling
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) evaluate(i);
    });
  pool.clear();
  return out;
}

}  // namespace fcoc::fractal
