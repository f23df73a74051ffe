#pragma once

// End-to-end wiring: daily features -> rolling Hurst features -> supervised
// windows -> trained forecaster, plus the four-way component ablation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fcoc/forecaster.hpp"
#include "fcoc/fractal.hpp"
#include "fcoc/market.hpp"

namespace fcoc::pipeline {

struct HurstSettings {
  std::size_t window = 252;
  std::size_t stride = 1;
  double overlap = 1.0 / 3.0;
  std::size_t scale_min = 16;
  std::size_t scale_max = 0;  // 0 -> window / 4
  double q = 2.0;
  std::size_t detrend_order = 2;
  unsigned threads = 0;

  fractal::FractalConfig config() const {
    fractal::FractalConfig cfg;
    cfg.overlap_ratio = overlap;
    cfg.q = q;
    cfg.detrend_order = detrend_order;
    cfg.scales = fractal::log_scales(scale_min, scale_max == 0 ? window / 4 : scale_max);
    return cfg;
  }
};

inline const std::vector<std::string> kBaseFeatures{"r", "v", "rv"};
inline const std::vector<std::string> kFractalFeatures{"h_overall", "h_positive", "h_negative"};

inline forecast::FeatureFrame base_frame(const market::FeatureTable& table) {
  forecast::FeatureFrame f;
  f.names = {"r", "v", "rv", "bpv"};
  f.columns.resize(4);
  for (const auto& row : table.rows) {
    f.dates.push_back(row.date);
    f.columns[0].push_back(row.r);
    f.columns[1].push_back(row.v);
    f.columns[2].push_back(row.rv);
    f.columns[3].push_back(row.bpv);
  }
  return f;
}

/// Rolling Hurst exponents of (r, v) stamped on each window's last day and
/// appended to the frame; days without an estimate are NaN.
inline forecast::FeatureFrame with_hurst(const forecast::FeatureFrame& frame, const HurstSettings& settings) {
  const auto& r = frame.column("r");
  const auto& v = frame.column("v");
  const auto h = fractal::rolling_hurst_features(r, v, settings.window, settings.stride, settings.config(),
                                                 settings.threads);
  forecast::FeatureFrame out = frame;
  std::array<std::vector<double>, 3> cols;
  for (auto& c : cols) c.assign(frame.size(), forecast::kMissing);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::size_t d = h.end_index(i);
    if (h.overall[i]) cols[0][d] = *h.overall[i];
    if (h.positive[i]) cols[1][d] = *h.positive[i];
    if (h.negative[i]) cols[2][d] = *h.negative[i];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    out.names.push_back(kFractalFeatures[c]);
    out.columns.push_back(std::move(cols[c]));
  }
  return out;
}

struct RunOutcome {
  forecast::TrainResult result;
  market::MinMaxScaler scaler;
  forecast::SupervisedDataset dataset;  // scaled
  forecast::Metrics train;
  forecast::Metrics validation;
  forecast::Metrics test;
  double final_train_mse = 0.0;
};

/// Builds windows over `columns`, scales them on the training split, trains
/// and scores every split. The target is next-day `target_column`. A
/// non-empty `keep` mask limits rows to windows ending on marked days.
inline RunOutcome run_forecast(const forecast::FeatureFrame& frame, std::span<const std::string> columns,
                               const std::string& target_column, std::size_t look_back,
                               const forecast::ModelSpec& spec, const std::vector<bool>& keep = {}) {
  const auto selected = frame.select(columns);
  const auto& target = frame.column(target_column);
  auto raw = forecast::build_dataset(selected, target, look_back);
  if (!keep.empty()) raw = forecast::restrict_rows(std::move(raw), keep);
  RunOutcome out;
  out.scaler = forecast::fit_feature_scaler(raw);
  out.dataset = forecast::scale_dataset(std::move(raw), out.scaler);
  out.result = forecast::train(out.dataset, spec);
  const auto& net = out.result.model;
  out.final_train_mse = forecast::split_mse(net, out.dataset, out.dataset.range(forecast::Split::train));
  out.train = forecast::evaluate(net, out.dataset, forecast::Split::train);
  if (!out.dataset.range(forecast::Split::validation).empty())
    out.validation = forecast::evaluate(net, out.dataset, forecast::Split::validation);
  out.test = forecast::evaluate(net, out.dataset, forecast::Split::test);
  return out;
}

struct AblationConfig {
  const char* name;
  bool fractal_features;
  forecast::Activation activation;
};

inline constexpr std::array<AblationConfig, 4> kAblationConfigs{{
    {"benchmark", false, forecast::Activation::static_relu},
    {"coc_only", false, forecast::Activation::coc_lut},
    {"ffc_only", true, forecast::Activation::static_relu},
    {"full", true, forecast::Activation::coc_lut},
}};

inline const AblationConfig& ablation_config(std::string_view name) {
  for (const auto& c : kAblationConfigs)
    if (name == c.name) return c;
  throw Error(ErrorCode::InvalidSpec, "unknown configuration '" + std::string(name) + "'");
}

inline std::vector<std::string> ablation_columns(const AblationConfig& c) {
  auto cols = kBaseFeatures;
  if (c.fractal_features) cols.insert(cols.end(), kFractalFeatures.begin(), kFractalFeatures.end());
  return cols;
}

struct AblationOutcome {
  std::string name;
  RunOutcome run;
};

/// Runs the four configurations on one frame that already carries the Hurst
/// columns. The frame is cut at the first Hurst estimate and every
/// configuration is scored on the same rows: those whose full feature
/// window is complete.
inline std::vector<AblationOutcome> run_ablation(const forecast::FeatureFrame& frame_with_hurst, std::size_t look_back,
                                                 const forecast::ModelSpec& base_spec,
                                                 std::span<const std::string> only = {}) {
  for (const auto& name : only) ablation_config(name);
  const auto& h = frame_with_hurst.column("h_overall");
  std::size_t first = 0;
  while (first < h.size() && !std::isfinite(h[first])) ++first;
  if (first == h.size()) throw Error(ErrorCode::InsufficientData, "no Hurst estimate available");
  const auto frame = frame_with_hurst.tail_from(first);

  const auto all_cols = ablation_columns(ablation_config("full"));
  const auto reference = forecast::build_dataset(frame.select(all_cols), frame.column("rv"), look_back);
  std::vector<bool> keep(frame.size(), false);
  for (std::size_t t : reference.window_end) keep[t] = true;

  std::vector<AblationOutcome> out;
  for (const auto& c : kAblationConfigs) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    auto spec = base_spec;
    spec.activation = c.activation;
    const auto cols = ablation_columns(c);
    out.push_back({c.name, run_forecast(frame, cols, "rv", look_back, spec, keep)});
  }
  return out;
}

}  // namespace fcoc::pipeline
