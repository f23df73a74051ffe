#pragma once

// Lee oscillator with retrograde signaling, its max-over-time meta-activations
// and a compiled piecewise-linear table of their max-select envelope.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcoc/error.hpp"

namespace fcoc::chaos {

struct OscillatorParams {
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0;  // excitatory weights
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0;  // inhibitory weights
  double xi_e = 0, xi_i = 0;              // threshold biases
  double mu = 1;                          // gain
  double k_decay = 50;                    // attenuation
  double e_ratio = 0.001;                 // stimulus modulation
  std::string label = "custom";

  bool valid() const {
    const std::array<double, 13> all{a1, a2, a3, a4, b1, b2, b3, b4, xi_e, xi_i, mu, k_decay, e_ratio};
    return mu > 0 && k_decay > 0 && std::all_of(all.begin(), all.end(), [](double v) { return std::isfinite(v); });
  }
};

struct OscillatorState {
  double E = 0;
  double I = 0;
  double LORS = 0;
  double Omega = 0;

  friend bool operator==(const OscillatorState&, const OscillatorState&) = default;
};

struct Trajectory {
  std::vector<OscillatorState> states;  // states[0] is the initial state
  double input = 0;
  double stimulus = 0;
};

inline constexpr std::size_t kLibrarySize = 10;
inline constexpr std::size_t kDefaultSteps = 100;

/// The ten published parameterizations, thresholds set to zero.
inline OscillatorParams builtin_params(int type_id) {
  // clang-format off
  static constexpr double table[kLibrarySize][11] = {
    // a1    a2    a3    a4     b1    b2     b3     b4    mu  k    e
    { 0.0,  5.0,  5.0,  1.0,   0.0, -1.0,   1.0,   0.0,  5, 500, 0.001},
    { 0.5,  0.55, 0.55,-0.5,   0.5, -0.55, -0.55, -0.5,  1,  50, 0.001},
    { 0.5,  0.6,  0.55, 0.5,  -0.5, -0.6,  -0.55,  0.5,  1,  50, 0.001},
    {-0.5,  0.55, 0.55,-0.5,  -0.5, -0.55, -0.55,  0.5,  1,  50, 0.001},
    {-0.9,  0.9,  0.9, -0.9,   0.9, -0.9,  -0.9,   0.9,  1,  50, 0.001},
    {-0.9,  0.9,  0.9, -0.9,   0.9, -0.9,  -0.9,   0.9,  1, 300, 0.001},
    {-5.0,  5.0,  5.0, -5.0,   1.0, -1.0,  -1.0,   1.0,  1,  50, 0.001},
    {-5.0,  5.0,  5.0, -5.0,   1.0, -1.0,  -1.0,   1.0,  1, 300, 0.001},
    { 1.0, -1.0, -1.0, -1.0,  -1.0,  2.0,   2.0,  -1.0,  1,  50, 0.001},
    { 3.0,  3.0,  3.0,  2.0,   0.45,-0.45, -0.45,  1.0,  1,  50, 0.001},
  };
  // clang-format on
  if (type_id < 1 || type_id > static_cast<int>(kLibrarySize))
    throw Error(ErrorCode::UnknownType, "oscillator type " + std::to_string(type_id) + " is not in 1..10");
  const auto& r = table[type_id - 1];
  OscillatorParams p;
  p.a1 = r[0], p.a2 = r[1], p.a3 = r[2], p.a4 = r[3];
  p.b1 = r[4], p.b2 = r[5], p.b3 = r[6], p.b4 = r[7];
  p.mu = r[8], p.k_decay = r[9], p.e_ratio = r[10];
  p.label = "T" + std::to_string(type_id);
  return p;
}

inline std::vector<OscillatorParams> builtin_library() {
  std::vector<OscillatorParams> lib;
  for (int t = 1; t <= static_cast<int>(kLibrarySize); ++t) lib.push_back(builtin_params(t));
  return lib;
}

inline double stimulus(double input, const OscillatorParams& p) { return input + p.e_ratio * std::tanh(input); }

/// One simultaneous update: E, I and Omega are computed from the previous
/// state, then LORS from the new E, I, Omega.
inline OscillatorState step(const OscillatorState& s, const OscillatorParams& p, double stim) {
  auto f = [&](double x) { return std::tanh(p.mu * x); };
  OscillatorState next;
  next.E = f(p.a1 * s.LORS + p.a2 * s.E - p.a3 * s.I + p.a4 * stim - p.xi_e);
  next.I = f(p.b1 * s.LORS - p.b2 * s.E - p.b3 * s.I + p.b4 * stim - p.xi_i);
  next.Omega = f(stim);
  next.LORS = (next.E - next.I) * std::exp(-p.k_decay * stim * stim) + next.Omega;
  return next;
}

inline Trajectory run_oscillator(double input, const OscillatorParams& p, std::size_t n_steps = kDefaultSteps,
                                 const OscillatorState& init = {}) {
  Trajectory traj;
  traj.input = input;
  traj.stimulus = stimulus(input, p);
  traj.states.reserve(n_steps + 1);
  traj.states.push_back(init);
  for (std::size_t t = 0; t < n_steps; ++t) traj.states.push_back(step(traj.states.back(), p, traj.stimulus));
  return traj;
}

/// Max-over-time pooling of LORS over steps 1..N.
inline double meta_activation(double x, const OscillatorParams& p, std::size_t n_steps = kDefaultSteps,
                              const OscillatorState& init = {}) {
  const double stim = stimulus(x, p);
  OscillatorState s = init;
  s = step(s, p, stim);
  double best = s.LORS;
  for (std::size_t t = 1; t < n_steps; ++t) {
    s = step(s, p, stim);
    best = std::max(best, s.LORS);
  }
  return best;
}

inline std::vector<double> generate_meta_activations(double x, std::span<const OscillatorParams> library,
                                                     std::size_t n_steps = kDefaultSteps) {
  std::vector<double> out;
  out.reserve(library.size());
  for (const auto& p : library) out.push_back(meta_activation(x, p, n_steps));
  return out;
}

inline double max_select(std::span<const double> activations) {
  if (activations.empty()) throw Error(ErrorCode::EmptyLibrary, "max_select over an empty activation vector");
  return *std::max_element(activations.begin(), activations.end());
}

/// Max-select of the meta-activations, evaluated directly.
inline double lee_activation(double x, std::span<const OscillatorParams> library,
                             std::size_t n_steps = kDefaultSteps) {
  return max_select(generate_meta_activations(x, library, n_steps));
}

struct BifurcationPoint {
  double input;
  double value;
};

/// Post-transient LORS values (steps n_discard+1..n_steps) for every input.
inline std::vector<BifurcationPoint> bifurcation_diagram(const OscillatorParams& p, std::span<const double> inputs,
                                                         std::size_t n_steps, std::size_t n_discard,
                                                         const OscillatorState& init = {}) {
  if (n_discard >= n_steps) throw Error(ErrorCode::InvalidDomain, "n_discard must be smaller than n_steps");
  std::vector<BifurcationPoint> points;
  points.reserve(inputs.size() * (n_steps - n_discard));
  for (double x : inputs) {
    const auto traj = run_oscillator(x, p, n_steps, init);
    for (std::size_t t = n_discard + 1; t <= n_steps; ++t) points.push_back({x, traj.states[t].LORS});
  }
  return points;
}

/// Uniformly spaced grid of n points on [lo, hi], endpoints exact.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> xs(n);
  if (n == 1) {
    xs[0] = lo;
    return xs;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) xs[j] = lo + static_cast<double>(j) * h;
  xs[n - 1] = hi;
  return xs;
}

/// Tabulated per-type meta-activations and their max-select envelope,
/// linearly interpolated between uniform knots and clamped outside.
class MetaActivationLUT {
 public:
  /// Builds a table from arbitrary sampled rows; the envelope is their
  /// pointwise maximum.
  static MetaActivationLUT from_rows(double x_lo, double x_hi, std::vector<std::vector<double>> rows) {
    if (rows.empty() || rows.front().size() < 2)
      throw Error(ErrorCode::InvalidDomain, "a table needs at least one row of two knots");
    if (!(x_lo < x_hi)) throw Error(ErrorCode::InvalidDomain, "table domain must satisfy x_lo < x_hi");
    const std::size_t n = rows.front().size();
    for (const auto& row : rows)
      if (row.size() != n) throw Error(ErrorCode::InvalidDomain, "table rows differ in length");

    MetaActivationLUT lut;
    lut.x_lo_ = x_lo;
    lut.x_hi_ = x_hi;
    lut.knots_ = linspace(x_lo, x_hi, n);
    lut.rows_ = std::move(rows);
    lut.envelope_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      double best = lut.rows_.front()[j];
      for (const auto& row : lut.rows_) best = std::max(best, row[j]);
      lut.envelope_[j] = best;
    }
    lut.slopes_.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
      lut.slopes_[j] = (lut.envelope_[j + 1] - lut.envelope_[j]) / (lut.knots_[j + 1] - lut.knots_[j]);
    return lut;
  }

  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  std::size_t size() const { return knots_.size(); }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> envelope() const { return envelope_; }
  std::span<const double> slopes() const { return slopes_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  /// Index of the interval [knot_j, knot_j+1) containing x, for x in
  /// [x_lo, x_hi).
  std::size_t interval(double x) const {
    const double h = (x_hi_ - x_lo_) / static_cast<double>(knots_.size() - 1);
    auto j = static_cast<std::size_t>(std::clamp((x - x_lo_) / h, 0.0, static_cast<double>(knots_.size() - 2)));
    while (j + 2 < knots_.size() && x >= knots_[j + 1]) ++j;
    while (j > 0 && x < knots_[j]) --j;
    return j;
  }

  /// Interpolated envelope value and its slope. Knots take the slope of the
  /// interval to their right; the clamped region has slope 0. The value is
  /// extrapolated from the nearer knot of the interval.
  std::pair<double, double> evaluate(double x) const {
    if (!(x >= x_lo_)) return {envelope_.front(), 0.0};
    if (x >= x_hi_) return {envelope_.back(), 0.0};
    const std::size_t j = interval(x);
    const std::size_t near = (x - knots_[j] <= knots_[j + 1] - x) ? j : j + 1;
    return {envelope_[near] + slopes_[j] * (x - knots_[near]), slopes_[j]};
  }

 private:
  double x_lo_ = 0;
  double x_hi_ = 0;
  std::vector<double> knots_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> envelope_;
  std::vector<double> slopes_;
};

inline constexpr double kLutLow = -2.0;
inline constexpr double kLutHigh = 2.0;
inline constexpr std::size_t kLutKnots = 4001;

inline MetaActivationLUT build_lut(std::span<const OscillatorParams> library, double x_lo = kLutLow,
                                   double x_hi = kLutHigh, std::size_t n_knots = kLutKnots,
                                   std::size_t n_steps = kDefaultSteps) {
  if (library.empty()) throw Error(ErrorCode::EmptyLibrary, "cannot build a table from an empty library");
  if (!(x_lo < x_hi) || n_knots < 2)
    throw Error(ErrorCode::InvalidDomain, "table needs x_lo < x_hi and at least 2 knots");
  const auto knots = linspace(x_lo, x_hi, n_knots);
  std::vector<std::vector<double>> rows(library.size(), std::vector<double>(n_knots));
  for (std::size_t t = 0; t < library.size(); ++t)
    for (std::size_t j = 0; j < n_knots; ++j) rows[t][j] = meta_activation(knots[j], library[t], n_steps);
  return MetaActivationLUT::from_rows(x_lo, x_hi, std::move(rows));
}

inline std::pair<double, double> lut_activation(const MetaActivationLUT& lut, double x) { return lut.evaluate(x); }

}  // namespace fcoc::chaos
