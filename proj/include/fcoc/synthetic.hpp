#pragma once

// Seeded synthetic series used as ground truth for the estimators and as
// smoke-test market data.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "fcoc/error.hpp"
#include "fcoc/market.hpp"

namespace fcoc::synthetic {

/// Counter-based generator: draw k of stream `seed` is
/// splitmix64_mix(seed + (k + 1) * 0x9E3779B97F4A7C15). Any draw can be
/// reproduced from (seed, k) alone. Normals use Box-Muller on two
/// consecutive uniforms, cos branch first, then sin branch.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform in (0, 1); never returns 0.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
  }

  /// Index in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seed of an independent sub-stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::mix(seed ^ Rng::mix(stream + 0xD1B54A32D192ED03ULL));
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
inline double fgn_autocovariance(double hurst, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

namespace detail {

// In-place forward DFT, X_k = sum_j x_j exp(-2 pi i jk / n).
inline void dft(std::vector<std::complex<double>>& data) {
  const int n = static_cast<int>(data.size());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft_1d(n, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

/// Unit-variance fractional Gaussian noise by circulant embedding of the
/// exact autocovariance (Davies-Harte). Lengths that are not powers of two
/// are generated at the next power and truncated.
inline std::vector<double> gen_fgn(double hurst, std::size_t n, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw Error(ErrorCode::InvalidH, "Hurst exponent must lie in (0, 1)");
  if (n == 0) return {};
  const std::size_t half = detail::next_pow2(std::max<std::size_t>(n, 2));
  const std::size_t m = 2 * half;

  std::vector<std::complex<double>> eig(m);
  for (std::size_t k = 0; k <= half; ++k) eig[k] = fgn_autocovariance(hurst, k);
  for (std::size_t k = half + 1; k < m; ++k) eig[k] = eig[m - k];
  detail::dft(eig);

  Rng rng(seed);
  const double md = static_cast<double>(m);
  std::vector<std::complex<double>> w(m);
  auto lambda = [&](std::size_t k) { return std::max(eig[k].real(), 0.0); };
  w[0] = std::sqrt(lambda(0) / md) * rng.normal();
  for (std::size_t k = 1; k < half; ++k) {
    const double scale = std::sqrt(lambda(k) / (2.0 * md));
    const double re = rng.normal();
    const double im = rng.normal();
    w[k] = {scale * re, scale * im};
    w[m - k] = std::conj(w[k]);
  }
  w[half] = std::sqrt(lambda(half) / md) * rng.normal();
  detail::dft(w);

  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = w[j].real();
  return out;
}

/// Consecutive weekdays starting at `first` (moved forward off weekends).
inline std::vector<market::Date> business_days(market::Date first, std::size_t count) {
  using namespace std::chrono;
  std::vector<market::Date> out;
  out.reserve(count);
  sys_days day{first};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.emplace_back(day);
    day += days{1};
  }
  return out;
}

inline const market::Date kSyntheticStart{std::chrono::year{2000}, std::chrono::January, std::chrono::day{3}};

/// GARCH(1,1) intraday returns, one continuous variance recursion sliced into
/// days of m_per_day returns each.
inline std::vector<market::IntradayDay> gen_garch_intraday(double omega, double alpha, double beta, std::size_t days,
                                                           std::size_t m_per_day, std::uint64_t seed,
                                                           market::Date first = kSyntheticStart) {
  if (omega < 0.0 || alpha < 0.0 || beta < 0.0 || !(alpha + beta < 1.0))
    throw Error(ErrorCode::NonStationaryParams, "GARCH needs non-negative parameters with alpha + beta < 1");
  if (m_per_day == 0) throw Error(ErrorCode::InvalidSpec, "at least one return per day is required");
  Rng rng(seed);
  const auto dates = business_days(first, days);
  std::vector<market::IntradayDay> out;
  out.reserve(days);
  double variance = omega / (1.0 - alpha - beta);
  double prev = 0.0;
  bool started = false;
  for (std::size_t d = 0; d < days; ++d) {
    market::IntradayDay day{dates[d], {}};
    day.returns.reserve(m_per_day);
    for (std::size_t j = 0; j < m_per_day; ++j) {
      if (started) variance = omega + alpha * prev * prev + beta * variance;
      started = true;
      prev = std::sqrt(variance) * rng.normal();
      day.returns.push_back(prev);
    }
    out.push_back(std::move(day));
  }
  return out;
}

struct SeriesPair {
  std::vector<double> rx;
  std::vector<double> ry;
};

/// Correlated fGn pair whose amplitude is multiplied by `downtrend_amp`
/// wherever the centred local slope of the primary series is negative.
inline SeriesPair gen_asymmetric_vol(double base_h, double downtrend_amp, std::size_t n, std::uint64_t seed,
                                     double correlation = 0.5, std::size_t trend_window = 16) {
  if (!(downtrend_amp > 0.0)) throw Error(ErrorCode::InvalidSpec, "downtrend amplitude must be positive");
  if (!(correlation >= -1.0 && correlation <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "correlation must lie in [-1, 1]");
  if (trend_window < 2) throw Error(ErrorCode::InvalidSpec, "trend window must be at least 2");
  const auto base = gen_fgn(base_h, n, derive_seed(seed, 1));
  const auto other = gen_fgn(base_h, n, derive_seed(seed, 2));
  const double orth = std::sqrt(1.0 - correlation * correlation);

  SeriesPair out{std::vector<double>(n), std::vector<double>(n)};
  const std::size_t half = trend_window / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(n, lo + trend_window);
    // slope of the least-squares line over [lo, hi)
    const double len = static_cast<double>(hi - lo);
    const double x_mean = 0.5 * (len - 1.0);
    double y_mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) y_mean += base[i];
    y_mean /= len;
    double sxy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sxy += (static_cast<double>(i - lo) - x_mean) * (base[i] - y_mean);
    const double amp = (hi - lo >= 2 && sxy < 0.0) ? downtrend_amp : 1.0;
    out.rx[t] = amp * base[t];
    out.ry[t] = amp * (correlation * base[t] + orth * other[t]);
  }
  return out;
}

}  // namespace fcoc::synthetic
