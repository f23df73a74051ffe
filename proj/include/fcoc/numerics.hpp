#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fcoc/error.hpp"

namespace fcoc::numerics {

/// Dense polynomial, coefficients stored lowest degree first.
struct Polynomial {
  std::vector<double> coefficients;

  std::size_t degree() const { return coefficients.empty() ? 0 : coefficients.size() - 1; }

  // Horner
  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

namespace detail {

inline std::size_t count_distinct(std::span<const double> xs) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

// Least squares of a column-major n x p design via Householder reflections.
// The design is overwritten; rhs is overwritten with Q^T rhs.
inline std::vector<double> householder_solve(std::vector<double>& a, std::size_t n, std::size_t p,
                                             std::vector<double>& rhs) {
  auto at = [&](std::size_t row, std::size_t col) -> double& { return a[col * n + row]; };

  for (std::size_t k = 0; k < p; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm = std::hypot(norm, at(i, k));
    if (norm == 0.0) throw Error(ErrorCode::DegenerateDesign, "rank-deficient design column");
    const double alpha = at(k, k) > 0 ? -norm : norm;
    // v = x - alpha e1, stored in place below the diagonal
    at(k, k) -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) vnorm2 += at(i, k) * at(i, k);
    if (vnorm2 > 0.0) {
      for (std::size_t j = k + 1; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += at(i, k) * at(i, j);
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = k; i < n; ++i) at(i, j) -= f * at(i, k);
      }
      double dot = 0.0;
      for (std::size_t i = k; i < n; ++i) dot += at(i, k) * rhs[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < n; ++i) rhs[i] -= f * at(i, k);
    }
    at(k, k) = alpha;
  }

  // back substitution on the upper-triangular R
  std::vector<double> x(p, 0.0);
  for (std::size_t kk = p; kk-- > 0;) {
    double s = rhs[kk];
    for (std::size_t j = kk + 1; j < p; ++j) s -= at(kk, j) * x[j];
    x[kk] = s / at(kk, kk);
  }
  return x;
}

}  // namespace detail

/// Least-squares polynomial of the given degree through (xs, ys).
///
/// The Vandermonde system is solved by Householder QR rather than by forming
/// the normal equations; segment abscissae run to several hundred points.
inline Polynomial polyfit(std::span<const double> xs, std::span<const double> ys, std::size_t degree) {
  if (xs.size() != ys.size())
    throw Error(ErrorCode::LengthMismatch,
                "polyfit: " + std::to_string(xs.size()) + " abscissae vs " + std::to_string(ys.size()) + " ordinates");
  const std::size_t p = degree + 1;
  if (xs.size() < p || detail::count_distinct(xs) < p)
    throw Error(ErrorCode::DegenerateDesign,
                "polyfit: need at least " + std::to_string(p) + " distinct abscissae for degree " +
                    std::to_string(degree));

  const std::size_t n = xs.size();
  std::vector<double> design(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      design[j * n + i] = v;
      v *= xs[i];
    }
  }
  std::vector<double> rhs(ys.begin(), ys.end());
  return Polynomial{detail::householder_solve(design, n, p, rhs)};
}

/// Fit on the implicit abscissa 0..n-1.
inline Polynomial polyfit_indexed(std::span<const double> ys, std::size_t degree) {
  std::vector<double> xs(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  return polyfit(xs, ys, degree);
}

/// Slope of the least-squares line through (i, ys[i]), i = 0..n-1.
inline double linear_trend_slope(std::span<const double> ys) {
  const std::size_t n = ys.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "linear_trend_slope needs at least 2 points");
  const double x_mean = 0.5 * static_cast<double>(n - 1);
  double y_mean = 0.0;
  for (double y : ys) y_mean += y;
  y_mean /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (ys[i] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// OLS of ln(values) on ln(sizes). The slope is the scaling exponent.
inline ScalingFit loglog_fit(std::span<const double> sizes, std::span<const double> values) {
  if (sizes.size() != values.size())
    throw Error(ErrorCode::LengthMismatch, "loglog_fit: sizes and values differ in length");
  const std::size_t n = sizes.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "loglog_fit needs at least 2 points");

  std::vector<double> lx(n);
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sizes[i] > 0.0) || !(values[i] > 0.0))
      throw Error(ErrorCode::NonPositiveInput, "loglog_fit: point " + std::to_string(i) + " is not strictly positive");
    lx[i] = std::log(sizes[i]);
    ly[i] = std::log(values[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateDesign, "loglog_fit: all sizes are equal");

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_points = n;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace fcoc::numerics
