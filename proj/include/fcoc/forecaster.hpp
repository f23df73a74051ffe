#pragma once

// Look-back window datasets, a small feedforward regressor with a pluggable
// hidden activation, mini-batch Adam on MSE, and the evaluation metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fcoc/chaos.hpp"
#include "fcoc/error.hpp"
#include "fcoc/market.hpp"
#include "fcoc/synthetic.hpp"

namespace fcoc::forecast {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Date-aligned feature columns; NaN marks a missing value.
struct FeatureFrame {
  std::vector<market::Date> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t size() const { return dates.size(); }

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == name) return columns[c];
    throw Error(ErrorCode::InvalidSpec, "unknown feature column '" + std::string(name) + "'");
  }

  FeatureFrame select(std::span<const std::string> wanted) const {
    FeatureFrame out;
    out.dates = dates;
    for (const auto& name : wanted) {
      out.names.push_back(name);
      out.columns.push_back(column(name));
    }
    return out;
  }

  /// Rows [first, size()).
  FeatureFrame tail_from(std::size_t first) const {
    FeatureFrame out;
    out.names = names;
    out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(std::min(first, dates.size())), dates.end());
    for (const auto& col : columns)
      out.columns.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(std::min(first, col.size())), col.end());
    return out;
  }
};

struct SplitRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
};

enum class Split { train, validation, test };

/// Flattened look-back windows (day-major: inputs[row][lag * n_features + f],
/// lag 0 the oldest day) paired with next-day targets.
struct SupervisedDataset {
  std::size_t look_back = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  std::vector<market::Date> target_dates;
  std::vector<std::size_t> window_end;  // frame index of each window's last day
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  std::size_t size() const { return targets.size(); }

  SplitRange range(Split split) const {
    switch (split) {
      case Split::train: return {0, train_end};
      case Split::validation: return {train_end, val_end};
      case Split::test: return {val_end, size()};
    }
    return {};
  }
};

/// Chronological 7:1:2 boundaries for n rows.
inline std::pair<std::size_t, std::size_t> split_boundaries(std::size_t n) { return {n * 7 / 10, n * 8 / 10}; }

/// Row t holds features of days t-L+1..t and the target of day t+1. Rows
/// touching any missing value are dropped.
inline SupervisedDataset build_dataset(const FeatureFrame& frame, std::span<const double> target,
                                       std::size_t look_back = 60) {
  if (target.size() != frame.size())
    throw Error(ErrorCode::UnalignedSeries, "target and features must share one date index");
  for (const auto& col : frame.columns)
    if (col.size() != frame.size()) throw Error(ErrorCode::UnalignedSeries, "feature column length differs");
  if (look_back == 0) throw Error(ErrorCode::InvalidSpec, "look-back must be positive");
  if (frame.size() <= look_back)
    throw Error(ErrorCode::InsufficientData, "need more than " + std::to_string(look_back) + " aligned days");

  const std::size_t nf = frame.columns.size();
  std::vector<bool> day_ok(frame.size(), true);
  for (std::size_t d = 0; d < frame.size(); ++d)
    for (const auto& col : frame.columns)
      if (!std::isfinite(col[d])) day_ok[d] = false;

  SupervisedDataset ds;
  ds.look_back = look_back;
  ds.n_features = nf;
  for (std::size_t t = look_back - 1; t + 1 < frame.size(); ++t) {
    if (!std::isfinite(target[t + 1])) continue;
    bool ok = true;
    for (std::size_t d = t + 1 - look_back; d <= t && ok; ++d) ok = day_ok[d];
    if (!ok) continue;
    std::vector<double> row;
    row.reserve(look_back * nf);
    for (std::size_t d = t + 1 - look_back; d <= t; ++d)
      for (std::size_t f = 0; f < nf; ++f) row.push_back(frame.columns[f][d]);
    ds.inputs.push_back(std::move(row));
    ds.targets.push_back(target[t + 1]);
    ds.target_dates.push_back(frame.dates[t + 1]);
    ds.window_end.push_back(t);
  }
  if (ds.inputs.empty()) throw Error(ErrorCode::InsufficientData, "no complete look-back window");
  std::tie(ds.train_end, ds.val_end) = split_boundaries(ds.size());
  return ds;
}

/// Keeps the rows whose window ends on a day marked in `keep` and recomputes
/// the split boundaries.
inline SupervisedDataset restrict_rows(SupervisedDataset ds, const std::vector<bool>& keep) {
  SupervisedDataset out;
  out.look_back = ds.look_back;
  out.n_features = ds.n_features;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (ds.window_end[r] >= keep.size() || !keep[ds.window_end[r]]) continue;
    out.inputs.push_back(std::move(ds.inputs[r]));
    out.targets.push_back(ds.targets[r]);
    out.target_dates.push_back(ds.target_dates[r]);
    out.window_end.push_back(ds.window_end[r]);
  }
  if (out.inputs.empty()) throw Error(ErrorCode::InsufficientData, "no rows left after restriction");
  std::tie(out.train_end, out.val_end) = split_boundaries(out.size());
  return out;
}

/// Per-feature min-max bounds taken from the days covered by training rows.
inline market::MinMaxScaler fit_feature_scaler(const SupervisedDataset& ds) {
  std::vector<std::vector<double>> days;
  const auto train = ds.range(Split::train);
  if (train.empty()) throw Error(ErrorCode::EmptySplit, "training split is empty");
  for (std::size_t r = train.begin; r < train.end; ++r)
    for (std::size_t lag = 0; lag < ds.look_back; ++lag)
      days.emplace_back(ds.inputs[r].begin() + static_cast<std::ptrdiff_t>(lag * ds.n_features),
                        ds.inputs[r].begin() + static_cast<std::ptrdiff_t>((lag + 1) * ds.n_features));
  return market::MinMaxScaler::fit(days);
}

inline SupervisedDataset scale_dataset(SupervisedDataset ds, const market::MinMaxScaler& scaler) {
  if (scaler.width() != ds.n_features) throw Error(ErrorCode::LengthMismatch, "scaler width differs from features");
  for (auto& row : ds.inputs)
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = scaler.apply(i % ds.n_features, row[i]);
  return ds;
}

// ---------------------------------------------------------------------------

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double qlike = 0.0;
  std::size_t n = 0;
  std::size_t floored = 0;  // predictions raised to the QLIKE floor
};

inline constexpr double kQlikeFloor = 1e-8;

/// mean(y/yhat - ln(y/yhat) - 1) with yhat floored at 1e-8.
inline double qlike_term(double actual, double predicted) {
  const double ratio = actual / std::max(predicted, kQlikeFloor);
  return ratio - std::log(ratio) - 1.0;
}

inline Metrics compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw Error(ErrorCode::LengthMismatch, "actual and predicted differ");
  if (actual.empty()) throw Error(ErrorCode::EmptySplit, "cannot score an empty split");
  const auto n = static_cast<double>(actual.size());
  Metrics m;
  m.n = actual.size();
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= n;
  double sse = 0.0;
  double sst = 0.0;
  double sae = 0.0;
  double ql = 0.0;
  bool ql_defined = true;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    sse += e * e;
    sae += std::abs(e);
    sst += (actual[i] - mean) * (actual[i] - mean);
    if (predicted[i] < kQlikeFloor) ++m.floored;
    if (actual[i] > 0.0)
      ql += qlike_term(actual[i], predicted[i]);
    else
      ql_defined = false;
  }
  m.mse = sse / n;
  m.mae = sae / n;
  m.r2 = sst > 0.0 ? 1.0 - sse / sst : std::numeric_limits<double>::quiet_NaN();
  m.qlike = ql_defined ? ql / n : std::numeric_limits<double>::quiet_NaN();
  return m;
}

// ---------------------------------------------------------------------------

enum class Activation { static_relu, coc_lut, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::static_relu: return "static_relu";
    case Activation::coc_lut: return "coc_lut";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "static_relu" || s == "relu") return Activation::static_relu;
  if (s == "coc_lut" || s == "coc") return Activation::coc_lut;
  if (s == "identity" || s == "linear") return Activation::identity;
  throw Error(ErrorCode::InvalidSpec, "unknown activation '" + std::string(s) + "'");
}

struct ModelSpec {
  std::vector<std::size_t> widths{32, 16, 1};
  Activation activation = Activation::static_relu;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 7;
  bool scale_target = true;  // output = lo + (hi - lo) * z, fitted on training targets

  void validate() const {
    if (widths.empty() || widths.back() != 1) throw Error(ErrorCode::InvalidSpec, "final layer width must be 1");
    for (auto w : widths)
      if (w == 0) throw Error(ErrorCode::InvalidSpec, "layer widths must be at least 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning rate must be positive");
    if (batch_size == 0) throw Error(ErrorCode::InvalidSpec, "batch size must be positive");
  }
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // row-major out x in
  std::vector<double> bias;
};

/// Feedforward net: hidden layers use the configured activation, the output
/// layer is linear.
class Network {
 public:
  Network() = default;

  Network(std::size_t input_width, const ModelSpec& spec, std::shared_ptr<const chaos::MetaActivationLUT> lut = nullptr)
      : activation_(spec.activation), lut_(std::move(lut)) {
    spec.validate();
    if (input_width == 0) throw Error(ErrorCode::InvalidSpec, "input width must be positive");
    if (activation_ == Activation::coc_lut && !lut_)
      throw Error(ErrorCode::InvalidSpec, "coc_lut activation needs a lookup table");
    synthetic::Rng rng(synthetic::derive_seed(spec.seed, 0x1417));
    std::size_t in = input_width;
    for (std::size_t w : spec.widths) {
      DenseLayer layer{in, w, std::vector<double>(in * w), std::vector<double>(w, 0.0)};
      // Glorot uniform
      const double limit = std::sqrt(6.0 / static_cast<double>(in + w));
      for (double& x : layer.weights) x = (2.0 * rng.uniform() - 1.0) * limit;
      layers_.push_back(std::move(layer));
      in = w;
    }
  }

  Activation activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::shared_ptr<const chaos::MetaActivationLUT>& lut() const { return lut_; }
  std::size_t input_width() const { return layers_.empty() ? 0 : layers_.front().in; }

  /// Fixed affine map on the last layer's output; not a trainable parameter.
  void set_output_map(double shift, double scale) {
    if (!std::isfinite(shift) || !std::isfinite(scale) || scale == 0.0)
      throw Error(ErrorCode::InvalidSpec, "output map needs a finite shift and a finite non-zero scale");
    out_shift_ = shift;
    out_scale_ = scale;
  }
  double output_shift() const { return out_shift_; }
  double output_scale() const { return out_scale_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Layer by layer, weights then biases.
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers_) {
      p.insert(p.end(), l.weights.begin(), l.weights.end());
      p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw Error(ErrorCode::LengthMismatch, "parameter vector has wrong size");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (double& w : l.weights) w = p[k++];
      for (double& b : l.bias) b = p[k++];
    }
  }

  /// Activation value and derivative.
  std::pair<double, double> activate(double z) const {
    switch (activation_) {
      case Activation::static_relu: return z > 0.0 ? std::pair{z, 1.0} : std::pair{0.0, 0.0};
      case Activation::coc_lut: return lut_->evaluate(z);
      case Activation::identity: return {z, 1.0};
    }
    return {z, 1.0};
  }

  double predict(std::span<const double> x) const {
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      next.assign(l.out, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        double z = l.bias[o];
        const double* w = &l.weights[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) z += w[i] * a[i];
        next[o] = li + 1 < layers_.size() ? activate(z).first : z;
      }
      a.swap(next);
    }
    return out_shift_ + out_scale_ * a[0];
  }

  std::vector<double> predict(std::span<const std::vector<double>> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
  }

  /// Mean squared error over the selected rows and its gradient with
  /// respect to parameters() (same layout).
  double loss_and_gradient(std::span<const std::vector<double>> inputs, std::span<const double> targets,
                           std::span<const std::size_t> batch, std::vector<double>& grad) const {
    grad.assign(parameter_count(), 0.0);
    if (batch.empty()) return 0.0;
    const std::size_t depth = layers_.size();
    std::vector<std::vector<double>> acts(depth + 1);
    std::vector<std::vector<double>> derivs(depth);
    std::vector<std::size_t> offset(depth);
    for (std::size_t li = 0, k = 0; li < depth; ++li) {
      offset[li] = k;
      k += layers_[li].weights.size() + layers_[li].bias.size();
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> delta;
    std::vector<double> prev_delta;
    for (std::size_t idx : batch) {
      acts[0].assign(inputs[idx].begin(), inputs[idx].end());
      for (std::size_t li = 0; li < depth; ++li) {
        const auto& l = layers_[li];
        acts[li + 1].assign(l.out, 0.0);
        derivs[li].assign(l.out, 1.0);
        for (std::size_t o = 0; o < l.out; ++o) {
          double z = l.bias[o];
          const double* w = &l.weights[o * l.in];
          for (std::size_t i = 0; i < l.in; ++i) z += w[i] * acts[li][i];
          if (li + 1 < depth) {
            const auto [v, d] = activate(z);
            acts[li + 1][o] = v;
            derivs[li][o] = d;
          } else {
            acts[li + 1][o] = z;
          }
        }
      }
      const double err = out_shift_ + out_scale_ * acts[depth][0] - targets[idx];
      loss += err * err * scale;
      delta.assign(1, 2.0 * err * scale * out_scale_);
      for (std::size_t li = depth; li-- > 0;) {
        const auto& l = layers_[li];
        double* gw = &grad[offset[li]];
        double* gb = gw + l.weights.size();
        for (std::size_t o = 0; o < l.out; ++o) delta[o] *= derivs[li][o];
        prev_delta.assign(l.in, 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
          const double d = delta[o];
          gb[o] += d;
          const double* w = &l.weights[o * l.in];
          for (std::size_t i = 0; i < l.in; ++i) {
            gw[o * l.in + i] += d * acts[li][i];
            prev_delta[i] += d * w[i];
          }
        }
        delta.swap(prev_delta);
      }
    }
    return loss;
  }

 private:
  Activation activation_ = Activation::identity;
  std::shared_ptr<const chaos::MetaActivationLUT> lut_;
  std::vector<DenseLayer> layers_;
  double out_shift_ = 0.0;
  double out_scale_ = 1.0;
};

/// Default meta-activation table shared by every coc_lut network.
inline std::shared_ptr<const chaos::MetaActivationLUT> default_coc_lut() {
  static const auto lut = [] {
    const auto lib = chaos::builtin_library();
    return std::make_shared<const chaos::MetaActivationLUT>(chaos::build_lut(lib));
  }();
  return lut;
}

class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_qlike = 0.0;
};

struct TrainResult {
  Network model;
  std::vector<EpochLog> trace;
  std::size_t best_epoch = 0;  // 0 = initialization
  double initial_train_mse = 0.0;
};

inline double split_mse(const Network& net, const SupervisedDataset& ds, SplitRange r) {
  double acc = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    const double e = net.predict(ds.inputs[i]) - ds.targets[i];
    acc += e * e;
  }
  return r.empty() ? 0.0 : acc / static_cast<double>(r.size());
}

inline double split_qlike(const Network& net, const SupervisedDataset& ds, SplitRange r) {
  double acc = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) acc += qlike_term(ds.targets[i], net.predict(ds.inputs[i]));
  return r.empty() ? 0.0 : acc / static_cast<double>(r.size());
}

/// Mini-batch Adam on MSE. The returned model is the epoch with the lowest
/// validation QLIKE (lowest training MSE when there is no validation split
/// or the targets are not all positive).
inline TrainResult train(const SupervisedDataset& ds, const ModelSpec& spec,
                         std::shared_ptr<const chaos::MetaActivationLUT> lut = nullptr) {
  spec.validate();
  const auto train_range = ds.range(Split::train);
  const auto val_range = ds.range(Split::validation);
  if (train_range.empty()) throw Error(ErrorCode::EmptySplit, "training split is empty");
  if (spec.activation == Activation::coc_lut && !lut) lut = default_coc_lut();

  TrainResult result{Network(ds.inputs.front().size(), spec, lut), {}, 0, 0.0};
  Network& net = result.model;
  if (spec.scale_target) {
    const auto [lo, hi] = std::minmax_element(ds.targets.begin() + static_cast<std::ptrdiff_t>(train_range.begin),
                                              ds.targets.begin() + static_cast<std::ptrdiff_t>(train_range.end));
    if (std::isfinite(*lo) && std::isfinite(*hi) && *hi - *lo > 0.0 && std::isfinite(*hi - *lo))
      net.set_output_map(*lo, *hi - *lo);
  }
  result.initial_train_mse = split_mse(net, ds, train_range);

  bool qlike_usable = !val_range.empty();
  for (std::size_t i = val_range.begin; i < val_range.end; ++i)
    if (!(ds.targets[i] > 0.0)) qlike_usable = false;
  auto selection_score = [&](const EpochLog& log) { return qlike_usable ? log.val_qlike : log.train_mse; };

  std::vector<double> params = net.parameters();
  std::vector<double> best = params;
  EpochLog init_log{0, result.initial_train_mse, split_mse(net, ds, val_range),
                    qlike_usable ? split_qlike(net, ds, val_range) : 0.0};
  double best_score = selection_score(init_log);

  Adam adam(params.size(), spec.learning_rate);
  synthetic::Rng shuffler(synthetic::derive_seed(spec.seed, 0x5EED));
  std::vector<std::size_t> order(train_range.size());
  std::vector<double> grad;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), train_range.begin);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffler.below(i)]);
    for (std::size_t b = 0; b < order.size(); b += spec.batch_size) {
      const std::span<const std::size_t> batch(order.data() + b, std::min(spec.batch_size, order.size() - b));
      const double loss = net.loss_and_gradient(ds.inputs, ds.targets, batch, grad);
      if (!std::isfinite(loss))
        throw Error(ErrorCode::DivergedLoss, "non-finite batch loss in epoch " + std::to_string(epoch));
      adam.step(params, grad);
      net.set_parameters(params);
    }
    EpochLog log{epoch, split_mse(net, ds, train_range), split_mse(net, ds, val_range),
                 qlike_usable ? split_qlike(net, ds, val_range) : 0.0};
    if (!std::isfinite(log.train_mse) || !std::isfinite(log.val_mse) || !std::isfinite(log.val_qlike))
      throw Error(ErrorCode::DivergedLoss, "non-finite loss after epoch " + std::to_string(epoch));
    result.trace.push_back(log);
    if (selection_score(log) < best_score) {
      best_score = selection_score(log);
      best = params;
      result.best_epoch = epoch;
    }
  }
  net.set_parameters(best);
  return result;
}

inline Metrics evaluate(const Network& net, const SupervisedDataset& ds, Split split) {
  const auto r = ds.range(split);
  if (r.empty()) throw Error(ErrorCode::EmptySplit, "split has no rows");
  std::vector<double> predicted;
  predicted.reserve(r.size());
  for (std::size_t i = r.begin; i < r.end; ++i) predicted.push_back(net.predict(ds.inputs[i]));
  return compute_metrics(std::span<const double>(ds.targets).subspan(r.begin, r.size()), predicted);
}

}  // namespace fcoc::forecast
