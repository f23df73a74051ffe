#pragma once

// Command-line front end: features, hurst, oscillator, train, eval, synth.
// Every subcommand gathers its flags into one JSON object, lets a --config
// file override it, and records the result in a run manifest.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fcoc/chaos.hpp"
#include "fcoc/error.hpp"
#include "fcoc/forecaster.hpp"
#include "fcoc/fractal.hpp"
#include "fcoc/io.hpp"
#include "fcoc/market.hpp"
#include "fcoc/pipeline.hpp"
#include "fcoc/synthetic.hpp"

namespace fcoc::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

inline std::string version() { return FCOC_VERSION; }

inline std::string to_hex(const unsigned char* data, unsigned len) {
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  return os.str();
}

inline std::string sha256(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return to_hex(md, len);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MalformedInput, "cannot write '" + path + "'");
  out << content;
}

/// Accepts "0.25" or "1/3".
inline double parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) {
    const auto v = io::parse_number(text);
    if (!v) throw Error(ErrorCode::InvalidConfig, "bad number '" + text + "'");
    return *v;
  }
  const auto num = io::parse_number(std::string_view(text).substr(0, slash));
  const auto den = io::parse_number(std::string_view(text).substr(slash + 1));
  if (!num || !den || *den == 0.0) throw Error(ErrorCode::InvalidConfig, "bad fraction '" + text + "'");
  return *num / *den;
}

inline std::vector<std::size_t> parse_widths(const json& j) {
  std::vector<std::size_t> out;
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  std::stringstream ss(j.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = io::parse_number(item);
    if (!v || *v < 1 || *v != std::floor(*v)) throw Error(ErrorCode::InvalidSpec, "bad layer width '" + item + "'");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline std::vector<std::string> parse_list(const json& j) {
  if (j.is_array()) return j.get<std::vector<std::string>>();
  std::vector<std::string> out;
  std::stringstream ss(j.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ','))
    if (!io::trim(item).empty()) out.emplace_back(io::trim(item));
  return out;
}

/// Output sink: a file path, or the caller's stream for "" and "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}
  std::ostream& stream() { return to_file() ? buffer_ : fallback_; }
  bool to_file() const { return !path_.empty() && path_ != "-"; }
  void close() {
    if (to_file()) write_file(path_, buffer_.str());
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buffer_;
};

struct Manifest {
  std::string command;
  json config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  json to_json() const {
    json j;
    j["tool"] = "fcoc";
    j["version"] = version();
    j["command"] = command;
    j["config"] = config;
    j["config_sha256"] = sha256(config.dump());
    j["inputs"] = json::array();
    for (const auto& p : inputs) j["inputs"].push_back({{"path", p}, {"sha256", sha256(read_file(p))}});
    j["outputs"] = outputs;
    return j;
  }

  void write(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }
};

/// Flags as JSON, overridden key by key by the --config file.
inline json merge_config(json flags, const std::string& config_path) {
  if (config_path.empty()) return flags;
  json file;
  try {
    file = json::parse(read_file(config_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, "config '" + config_path + "': " + e.what());
  }
  if (!file.is_object()) throw Error(ErrorCode::MalformedInput, "config must be a JSON object");
  for (const auto& [key, value] : file.items()) {
    if (!flags.contains(key)) throw Error(ErrorCode::InvalidSpec, "unknown config key '" + key + "'");
    flags[key] = value;
  }
  return flags;
}

inline std::string manifest_path(const json& cfg, const std::string& out_key) {
  if (cfg.contains("manifest") && !cfg["manifest"].get<std::string>().empty()) return cfg["manifest"];
  const std::string out = cfg.value(out_key, std::string());
  if (out.empty() || out == "-") return {};
  return out_key == "out-dir" ? (fs::path(out) / "manifest.json").string() : out + ".manifest.json";
}

inline void finish(Manifest m, const json& cfg, const std::string& out_key) {
  const auto path = manifest_path(cfg, out_key);
  if (!path.empty()) m.write(path);
}

// --- features ---------------------------------------------------------------

inline int cmd_features(const json& cfg, std::ostream& out, std::ostream& err) {
  const std::string input = cfg["input"];
  std::istringstream in(read_file(input));
  const auto data = io::read_intraday_csv(in);
  const auto table = data.closes ? market::compute_features(data.days, std::span<const double>(*data.closes))
                                 : market::compute_features(data.days);
  if (table.repaired_bpv_days > 0)
    err << "warning: " << table.repaired_bpv_days << " day(s) with zero bipower variation replaced by the "
        << "smallest positive value\n";
  Sink sink(cfg["out"], out);
  io::write_features_csv(sink.stream(), table);
  sink.close();
  finish({"features", cfg, {input}, {cfg["out"]}}, cfg, "out");
  return kExitOk;
}

// --- hurst ------------------------------------------------------------------

inline pipeline::HurstSettings hurst_settings(const json& cfg) {
  pipeline::HurstSettings s;
  s.window = cfg["window"];
  s.stride = cfg["stride"];
  s.overlap = cfg["overlap"].is_number() ? cfg["overlap"].get<double>() : parse_fraction(cfg["overlap"]);
  s.scale_min = cfg["scale-min"];
  s.scale_max = cfg["scale-max"];
  s.q = cfg["q"];
  s.detrend_order = cfg["order"];
  s.threads = cfg["threads"];
  return s;
}

inline json hurst_settings_json(const pipeline::HurstSettings& s) {
  return {{"window", s.window},       {"stride", s.stride}, {"overlap", s.overlap},        {"scale-min", s.scale_min},
          {"scale-max", s.scale_max}, {"q", s.q},           {"order", s.detrend_order}};
}

inline forecast::FeatureFrame read_frame(const std::string& path) {
  std::istringstream in(read_file(path));
  return io::to_frame(io::read_dated_table(in));
}

inline int cmd_hurst(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string input = cfg["features"];
  const auto frame = read_frame(input);
  const auto settings = hurst_settings(cfg);
  if (frame.size() < settings.window)
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(settings.window) + " rows, found " +
                                                 std::to_string(frame.size()));
  const auto& r = frame.column("r");
  const auto& v = frame.column("v");
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (!std::isfinite(r[i]) || !std::isfinite(v[i]))
      throw Error(ErrorCode::MalformedInput, "missing r or v on " + market::format_date(frame.dates[i]));
  const auto h = fractal::rolling_hurst_features(r, v, settings.window, settings.stride, settings.config(),
                                                 settings.threads);
  Sink sink(cfg["out"], out);
  io::write_hurst_csv(sink.stream(), frame.dates, h);
  sink.close();
  finish({"hurst", cfg, {input}, {cfg["out"]}}, cfg, "out");
  return kExitOk;
}

// --- oscillator -------------------------------------------------------------

inline std::vector<chaos::OscillatorParams> selected_types(const json& cfg) {
  const std::string type = cfg["type"];
  if (type == "all") return chaos::builtin_library();
  const auto id = io::parse_number(type);
  if (!id || *id != std::floor(*id)) throw Error(ErrorCode::UnknownType, "oscillator type '" + type + "' is not 1..10");
  return {chaos::builtin_params(static_cast<int>(*id))};
}

inline int cmd_oscillator(const json& cfg, std::ostream& out, std::ostream&) {
  const auto lib = selected_types(cfg);
  const std::string mode = cfg["mode"];
  const std::size_t steps = cfg["steps"];
  Sink sink(cfg["out"], out);
  auto& os = sink.stream();
  if (mode == "bifurcation") {
    const auto grid = chaos::linspace(cfg["grid-min"], cfg["grid-max"], cfg["grid-n"]);
    const std::size_t discard = cfg["discard"];
    if (lib.size() == 1) {
      io::write_bifurcation_csv(os, chaos::bifurcation_diagram(lib.front(), grid, steps, discard));
    } else {
      os << "type,input,value\n";
      for (const auto& p : lib)
        for (const auto& pt : chaos::bifurcation_diagram(p, grid, steps, discard))
          os << p.label << ',' << io::format_number(pt.input) << ',' << io::format_number(pt.value) << '\n';
    }
  } else if (mode == "lut") {
    const auto lut = chaos::build_lut(lib, cfg["lo"], cfg["hi"], cfg["knots"], steps);
    std::vector<std::string> labels;
    for (const auto& p : lib) labels.push_back("t" + p.label.substr(1));
    io::write_lut_csv(os, lut, labels);
  } else if (mode == "meta") {
    if (!cfg["at"].is_null()) {
      const double x = cfg["at"];
      os << "type,value\n";
      for (const auto& p : lib) os << p.label << ',' << io::format_number(chaos::meta_activation(x, p, steps)) << '\n';
    } else {
      os << "x";
      for (const auto& p : lib) os << ",t" << p.label.substr(1);
      os << ",max_select\n";
      for (double x : chaos::linspace(cfg["grid-min"], cfg["grid-max"], cfg["grid-n"])) {
        const auto acts = chaos::generate_meta_activations(x, lib, steps);
        os << io::format_number(x);
        for (double a : acts) os << ',' << io::format_number(a);
        os << ',' << io::format_number(chaos::max_select(acts)) << '\n';
      }
    }
  } else {
    throw Error(ErrorCode::InvalidSpec, "mode must be bifurcation, lut or meta");
  }
  sink.close();
  finish({"oscillator", cfg, {}, {cfg["out"]}}, cfg, "out");
  return kExitOk;
}

// --- train / eval -----------------------------------------------------------

inline forecast::ModelSpec model_spec(const json& cfg) {
  forecast::ModelSpec spec;
  spec.widths = parse_widths(cfg["widths"]);
  spec.activation = forecast::parse_activation(cfg["activation"].get<std::string>());
  spec.learning_rate = cfg["learning-rate"];
  spec.batch_size = cfg["batch-size"];
  spec.epochs = cfg["epochs"];
  spec.seed = cfg["seed"];
  spec.scale_target = cfg["scale-target"];
  spec.validate();
  return spec;
}

inline json spec_json(const forecast::ModelSpec& s) {
  return {{"widths", s.widths},         {"activation", forecast::to_string(s.activation)},
          {"learning-rate", s.learning_rate}, {"batch-size", s.batch_size},
          {"epochs", s.epochs},         {"seed", s.seed},
          {"scale-target", s.scale_target}};
}

inline json metrics_json(const forecast::Metrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"mse", num(m.mse)}, {"mae", num(m.mae)}, {"r2", num(m.r2)},
          {"qlike", num(m.qlike)}, {"n", m.n}, {"floored", m.floored}};
}

inline bool needs_hurst(const std::vector<std::string>& columns) {
  for (const auto& c : columns)
    if (std::find(pipeline::kFractalFeatures.begin(), pipeline::kFractalFeatures.end(), c) !=
        pipeline::kFractalFeatures.end())
      return true;
  return false;
}

/// Feature frame with rv/bpv/r/v and, when wanted, the Hurst columns taken
/// from a CSV or computed in process.
inline forecast::FeatureFrame load_frame(const json& cfg, bool want_hurst, const pipeline::HurstSettings& settings,
                                         std::vector<std::string>& inputs) {
  const std::string features = cfg["features"];
  inputs.push_back(features);
  auto frame = read_frame(features);
  const std::string hurst = cfg.value("hurst", std::string());
  if (!hurst.empty()) {
    inputs.push_back(hurst);
    frame = io::join_by_date(frame, read_frame(hurst));
  } else if (want_hurst) {
    frame = pipeline::with_hurst(frame, settings);
  }
  return frame;
}

inline json network_json(const forecast::Network& net) {
  json layers = json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  return layers;
}

inline json model_json(const pipeline::RunOutcome& run, const std::vector<std::string>& columns,
                       const std::string& target, std::size_t look_back, const forecast::ModelSpec& spec,
                       const pipeline::HurstSettings& hs) {
  return {{"format", "fcoc-model"},
          {"version", version()},
          {"columns", columns},
          {"target", target},
          {"look-back", look_back},
          {"spec", spec_json(spec)},
          {"hurst-settings", hurst_settings_json(hs)},
          {"scaler", {{"lo", run.scaler.lo()}, {"hi", run.scaler.hi()}}},
          {"best-epoch", run.result.best_epoch},
          {"output-map", {{"shift", run.result.model.output_shift()}, {"scale", run.result.model.output_scale()}}},
          {"layers", network_json(run.result.model)}};
}

inline json run_metrics_json(const pipeline::RunOutcome& run) {
  json trace = json::array();
  for (const auto& e : run.result.trace)
    trace.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}, {"val_qlike", e.val_qlike}});
  json j{{"train", metrics_json(run.train)},
         {"test", metrics_json(run.test)},
         {"best_epoch", run.result.best_epoch},
         {"initial_train_mse", run.result.initial_train_mse},
         {"final_train_mse", run.final_train_mse},
         {"rows", run.dataset.size()},
         {"trace", trace}};
  j["validation"] = run.validation.n > 0 ? metrics_json(run.validation) : json(nullptr);
  return j;
}

inline std::string predictions_csv(const forecast::Network& net, const forecast::SupervisedDataset& ds,
                                   forecast::SplitRange r) {
  std::vector<market::Date> dates(ds.target_dates.begin() + static_cast<std::ptrdiff_t>(r.begin),
                                  ds.target_dates.begin() + static_cast<std::ptrdiff_t>(r.end));
  std::vector<double> actual(ds.targets.begin() + static_cast<std::ptrdiff_t>(r.begin),
                             ds.targets.begin() + static_cast<std::ptrdiff_t>(r.end));
  std::vector<double> predicted;
  for (std::size_t i = r.begin; i < r.end; ++i) predicted.push_back(net.predict(ds.inputs[i]));
  std::ostringstream os;
  io::write_predictions_csv(os, dates, actual, predicted);
  return os.str();
}

inline int cmd_train(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string out_dir = cfg["out-dir"];
  const auto spec = model_spec(cfg);
  const auto hs = hurst_settings(cfg);
  const std::string target = cfg["target"];
  const std::size_t look_back = cfg["look-back"];
  const std::string ablation = cfg["ablation"];
  Manifest manifest{"train", cfg, {}, {}};
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = (fs::path(out_dir) / name).string();
    write_file(path, content);
    manifest.outputs.push_back(path);
  };

  json metrics;
  if (ablation.empty()) {
    const auto columns = parse_list(cfg["columns"]);
    const auto frame = load_frame(cfg, needs_hurst(columns), hs, manifest.inputs);
    const auto run = pipeline::run_forecast(frame, columns, target, look_back, spec);
    metrics = run_metrics_json(run);
    emit("model.json", model_json(run, columns, target, look_back, spec, hs).dump(2) + "\n");
    emit("predictions.csv", predictions_csv(run.result.model, run.dataset, run.dataset.range(forecast::Split::test)));
  } else {
    std::vector<std::string> only;
    if (ablation != "all") only.push_back(ablation);
    for (const auto& name : only) pipeline::ablation_config(name);
    auto frame = load_frame(cfg, true, hs, manifest.inputs);
    const auto outcomes = pipeline::run_ablation(frame, look_back, spec, only);
    metrics["configurations"] = json::object();
    for (const auto& o : outcomes) {
      metrics["configurations"][o.name] = run_metrics_json(o.run);
      auto run_spec = spec;
      run_spec.activation = pipeline::ablation_config(o.name).activation;
      emit("model_" + o.name + ".json",
           model_json(o.run, pipeline::ablation_columns(pipeline::ablation_config(o.name)), "rv", look_back, run_spec,
                      hs)
                   .dump(2) +
               "\n");
      emit("predictions_" + o.name + ".csv",
           predictions_csv(o.run.result.model, o.run.dataset, o.run.dataset.range(forecast::Split::test)));
    }
  }
  emit("metrics.json", metrics.dump(2) + "\n");
  out << metrics.dump(2) << "\n";
  finish(manifest, cfg, "out-dir");
  return kExitOk;
}

inline forecast::Network load_network(const json& model, std::size_t input_width) {
  forecast::ModelSpec spec;
  const auto& s = model.at("spec");
  spec.widths = s.at("widths").get<std::vector<std::size_t>>();
  spec.activation = forecast::parse_activation(s.at("activation").get<std::string>());
  spec.seed = s.at("seed");
  const auto lut = spec.activation == forecast::Activation::coc_lut ? forecast::default_coc_lut() : nullptr;
  forecast::Network net(input_width, spec, lut);
  std::vector<double> params;
  for (const auto& l : model.at("layers")) {
    for (double w : l.at("weights")) params.push_back(w);
    for (double b : l.at("bias")) params.push_back(b);
  }
  net.set_parameters(params);
  if (model.contains("output-map"))
    net.set_output_map(model["output-map"].at("shift"), model["output-map"].at("scale"));
  return net;
}

inline int cmd_eval(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string model_path = cfg["model"];
  json model;
  try {
    model = json::parse(read_file(model_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, "model '" + model_path + "': " + e.what());
  }
  Manifest manifest{"eval", cfg, {model_path}, {}};
  const auto columns = model.at("columns").get<std::vector<std::string>>();
  const std::string target = model.at("target");
  const std::size_t look_back = model.at("look-back");
  auto hs_cfg = model.at("hurst-settings");
  hs_cfg["threads"] = 0;
  const auto frame = load_frame(cfg, needs_hurst(columns), hurst_settings(hs_cfg), manifest.inputs);

  market::MinMaxScaler scaler(model.at("scaler").at("lo").get<std::vector<double>>(),
                              model.at("scaler").at("hi").get<std::vector<double>>());
  const auto ds = forecast::scale_dataset(
      forecast::build_dataset(frame.select(columns), frame.column(target), look_back), scaler);
  const auto net = load_network(model, ds.inputs.front().size());

  json metrics;
  for (auto [split, name] : {std::pair{forecast::Split::train, "train"}, std::pair{forecast::Split::validation, "validation"},
                             std::pair{forecast::Split::test, "test"}})
    metrics[name] = ds.range(split).empty() ? json(nullptr) : metrics_json(forecast::evaluate(net, ds, split));
  metrics["all"] = metrics_json(forecast::compute_metrics(ds.targets, net.predict(ds.inputs)));
  metrics["rows"] = ds.size();

  const std::string out_dir = cfg["out-dir"];
  const auto metrics_path = (fs::path(out_dir) / "metrics.json").string();
  const auto pred_path = (fs::path(out_dir) / "predictions.csv").string();
  write_file(metrics_path, metrics.dump(2) + "\n");
  write_file(pred_path, predictions_csv(net, ds, {0, ds.size()}));
  manifest.outputs = {metrics_path, pred_path};
  out << metrics.dump(2) << "\n";
  finish(manifest, cfg, "out-dir");
  return kExitOk;
}

// --- synth ------------------------------------------------------------------

inline int cmd_synth(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string kind = cfg["kind"];
  const std::uint64_t seed = cfg["seed"];
  const auto start = market::parse_date(cfg["start"].get<std::string>());
  if (!start) throw Error(ErrorCode::InvalidSpec, "bad start date");
  Sink sink(cfg["out"], out);
  auto& os = sink.stream();
  if (kind == "garch") {
    const auto days = synthetic::gen_garch_intraday(cfg["omega"], cfg["alpha"], cfg["beta"], cfg["days"],
                                                    cfg["m-per-day"], seed, *start);
    io::write_intraday_returns(os, days);
  } else if (kind == "fgn") {
    const std::size_t n = cfg["n"];
    const auto x = synthetic::gen_fgn(cfg["hurst"], n, seed);
    const auto dates = synthetic::business_days(*start, n);
    os << "date,value\n";
    for (std::size_t i = 0; i < n; ++i) os << market::format_date(dates[i]) << ',' << io::format_number(x[i]) << '\n';
  } else if (kind == "asym") {
    const std::size_t n = cfg["n"];
    const auto pair = synthetic::gen_asymmetric_vol(cfg["hurst"], cfg["amp"], n, seed, cfg["correlation"]);
    const auto dates = synthetic::business_days(*start, n);
    os << "date,rx,ry\n";
    for (std::size_t i = 0; i < n; ++i)
      os << market::format_date(dates[i]) << ',' << io::format_number(pair.rx[i]) << ','
         << io::format_number(pair.ry[i]) << '\n';
  } else {
    throw Error(ErrorCode::InvalidSpec, "kind must be garch, fgn or asym");
  }
  sink.close();
  finish({"synth", cfg, {}, {cfg["out"]}}, cfg, "out");
  return kExitOk;
}

// --- entry point ------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractal and chaotic-oscillator features for volatility forecasting"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config_path;
  std::string manifest;
  json cfg;
  std::function<int(const json&, std::ostream&, std::ostream&)> handler;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file whose keys override the flags");
    sub->add_option("--manifest", manifest, "manifest path (default derived from the output)");
  };

  // features
  std::string f_input, f_out;
  auto* features = app.add_subcommand("features", "intraday CSV -> date,rv,bpv,r,v");
  features->add_option("--input", f_input, "timestamp,price or date,ret_pct CSV");
  features->add_option("--out", f_out, "output CSV (stdout if omitted)");
  common(features);
  features->callback([&] {
    cfg = {{"input", f_input}, {"out", f_out}, {"manifest", manifest}};
    handler = cmd_features;
  });

  // hurst
  std::string h_features, h_out, h_overlap = "1/3";
  std::size_t h_window = 252, h_stride = 1, h_smin = 16, h_smax = 0, h_order = 2;
  double h_q = 2.0;
  unsigned h_threads = 0;
  auto* hurst = app.add_subcommand("hurst", "rolling asymmetric Hurst exponents of (r, v)");
  hurst->add_option("--features", h_features, "features CSV with r and v columns");
  hurst->add_option("--out", h_out, "output CSV (stdout if omitted)");
  hurst->add_option("--window", h_window, "rolling window T")->capture_default_str();
  hurst->add_option("--stride", h_stride, "window step k")->capture_default_str();
  hurst->add_option("--overlap", h_overlap, "segment overlap ratio, e.g. 1/3")->capture_default_str();
  hurst->add_option("--scale-min", h_smin, "smallest scale")->capture_default_str();
  hurst->add_option("--scale-max", h_smax, "largest scale (0: window/4)")->capture_default_str();
  hurst->add_option("--q", h_q, "fluctuation order q")->capture_default_str();
  hurst->add_option("--order", h_order, "detrending polynomial order")->capture_default_str();
  hurst->add_option("--threads", h_threads, "worker threads (0: hardware)")->capture_default_str();
  common(hurst);
  hurst->callback([&] {
    cfg = {{"features", h_features}, {"out", h_out},        {"window", h_window}, {"stride", h_stride},
           {"overlap", h_overlap},   {"scale-min", h_smin}, {"scale-max", h_smax}, {"q", h_q},
           {"order", h_order},       {"threads", h_threads}, {"manifest", manifest}};
    handler = cmd_hurst;
  });

  // oscillator
  std::string o_type = "all", o_mode = "meta", o_out;
  std::optional<double> o_at;
  double o_gmin = -1.5, o_gmax = 1.5, o_lo = chaos::kLutLow, o_hi = chaos::kLutHigh;
  std::size_t o_gn = 301, o_steps = chaos::kDefaultSteps, o_discard = 0, o_knots = chaos::kLutKnots;
  auto* osc = app.add_subcommand("oscillator", "bifurcation clouds, meta-activations and the lookup table");
  osc->add_option("--type", o_type, "1..10 or all")->capture_default_str();
  osc->add_option("--mode", o_mode, "bifurcation, lut or meta")->capture_default_str();
  osc->add_option("--at", o_at, "single input for --mode meta");
  osc->add_option("--grid-min", o_gmin, "input grid start")->capture_default_str();
  osc->add_option("--grid-max", o_gmax, "input grid end")->capture_default_str();
  osc->add_option("--grid-n", o_gn, "input grid size")->capture_default_str();
  osc->add_option("--steps", o_steps, "oscillator steps (bifurcation default 200)");
  osc->add_option("--discard", o_discard, "transient steps dropped in bifurcation mode (default steps/2)");
  osc->add_option("--knots", o_knots, "lookup table knots")->capture_default_str();
  osc->add_option("--lo", o_lo, "lookup table lower bound")->capture_default_str();
  osc->add_option("--hi", o_hi, "lookup table upper bound")->capture_default_str();
  osc->add_option("--out", o_out, "output CSV (stdout if omitted)");
  common(osc);
  osc->callback([&] {
    std::size_t steps = o_steps;
    std::size_t discard = o_discard;
    if (o_mode == "bifurcation") {
      if (osc->count("--steps") == 0) steps = 200;
      if (osc->count("--discard") == 0) discard = steps / 2;
    }
    cfg = {{"type", o_type},     {"mode", o_mode},   {"at", o_at ? json(*o_at) : json(nullptr)},
           {"grid-min", o_gmin}, {"grid-max", o_gmax}, {"grid-n", o_gn},
           {"steps", steps},     {"discard", discard}, {"knots", o_knots},
           {"lo", o_lo},         {"hi", o_hi},       {"out", o_out},
           {"manifest", manifest}};
    handler = cmd_oscillator;
  });

  // train
  std::string t_features, t_hurst, t_out, t_columns = "r,v,rv", t_target = "rv", t_widths = "32,16,1",
                                               t_act = "static_relu", t_ablation, t_overlap = "1/3";
  std::size_t t_look = 60, t_batch = 64, t_epochs = 100, t_window = 252, t_stride = 1;
  double t_lr = 1e-3;
  std::uint64_t t_seed = 7;
  bool t_scale_target = true;
  auto* train = app.add_subcommand("train", "fit the forecaster and write model, metrics and predictions");
  train->add_option("--features", t_features, "features CSV");
  train->add_option("--hurst", t_hurst, "Hurst CSV (computed in process when needed and omitted)");
  train->add_option("--out-dir", t_out, "output directory");
  train->add_option("--columns", t_columns, "comma-separated input columns")->capture_default_str();
  train->add_option("--target", t_target, "next-day target column")->capture_default_str();
  train->add_option("--look-back", t_look, "window length in days")->capture_default_str();
  train->add_option("--widths", t_widths, "layer widths, last must be 1")->capture_default_str();
  train->add_option("--activation", t_act, "static_relu, coc_lut or identity")->capture_default_str();
  train->add_option("--learning-rate", t_lr, "Adam step size")->capture_default_str();
  train->add_option("--batch-size", t_batch, "mini-batch size")->capture_default_str();
  train->add_option("--epochs", t_epochs, "training epochs")->capture_default_str();
  train->add_option("--seed", t_seed, "initialisation and shuffling seed")->capture_default_str();
  train->add_option("--scale-target", t_scale_target, "map the output through the training-target range")
      ->capture_default_str();
  train->add_option("--ablation", t_ablation, "benchmark, coc_only, ffc_only, full or all");
  train->add_option("--window", t_window, "rolling Hurst window")->capture_default_str();
  train->add_option("--stride", t_stride, "rolling Hurst step")->capture_default_str();
  train->add_option("--overlap", t_overlap, "segment overlap ratio")->capture_default_str();
  common(train);
  train->callback([&] {
    cfg = {{"features", t_features},
           {"hurst", t_hurst},
           {"out-dir", t_out},
           {"columns", t_columns},
           {"target", t_target},
           {"look-back", t_look},
           {"widths", t_widths},
           {"activation", t_act},
           {"learning-rate", t_lr},
           {"batch-size", t_batch},
           {"epochs", t_epochs},
           {"seed", t_seed},
           {"scale-target", t_scale_target},
           {"ablation", t_ablation},
           {"window", t_window},
           {"stride", t_stride},
           {"overlap", t_overlap},
           {"scale-min", 16},
           {"scale-max", 0},
           {"q", 2.0},
           {"order", 2},
           {"threads", 0},
           {"manifest", manifest}};
    handler = cmd_train;
  });

  // eval
  std::string e_model, e_features, e_hurst, e_out;
  auto* eval = app.add_subcommand("eval", "score a saved model on a features CSV");
  eval->add_option("--model", e_model, "model JSON written by train");
  eval->add_option("--features", e_features, "features CSV");
  eval->add_option("--hurst", e_hurst, "Hurst CSV (computed in process when needed and omitted)");
  eval->add_option("--out-dir", e_out, "output directory");
  common(eval);
  eval->callback([&] {
    cfg = {{"model", e_model}, {"features", e_features}, {"hurst", e_hurst}, {"out-dir", e_out},
           {"manifest", manifest}};
    handler = cmd_eval;
  });

  // synth
  std::string s_kind = "garch", s_out, s_start = "2000-01-03";
  std::uint64_t s_seed = 0;
  std::size_t s_days = 2000, s_m = 78, s_n = 4096;
  double s_omega = 0.01, s_alpha = 0.09, s_beta = 0.90, s_h = 0.5, s_amp = 2.0, s_corr = 0.5;
  auto* synth = app.add_subcommand("synth", "seeded synthetic series");
  synth->add_option("--kind", s_kind, "garch, fgn or asym")->capture_default_str();
  synth->add_option("--seed", s_seed, "generator seed")->capture_default_str();
  synth->add_option("--out", s_out, "output CSV (stdout if omitted)");
  synth->add_option("--start", s_start, "first business day")->capture_default_str();
  synth->add_option("--days", s_days, "garch: trading days")->capture_default_str();
  synth->add_option("--m-per-day", s_m, "garch: intraday returns per day")->capture_default_str();
  synth->add_option("--omega", s_omega, "garch: omega")->capture_default_str();
  synth->add_option("--alpha", s_alpha, "garch: alpha")->capture_default_str();
  synth->add_option("--beta", s_beta, "garch: beta")->capture_default_str();
  synth->add_option("--n", s_n, "fgn/asym: length")->capture_default_str();
  synth->add_option("--hurst", s_h, "fgn/asym: Hurst exponent in (0, 1)")->capture_default_str();
  synth->add_option("--amp", s_amp, "asym: downtrend amplitude")->capture_default_str();
  synth->add_option("--correlation", s_corr, "asym: pair correlation")->capture_default_str();
  common(synth);
  synth->callback([&] {
    cfg = {{"kind", s_kind},   {"seed", s_seed},   {"out", s_out},     {"start", s_start}, {"days", s_days},
           {"m-per-day", s_m}, {"omega", s_omega}, {"alpha", s_alpha}, {"beta", s_beta},   {"n", s_n},
           {"hurst", s_h},     {"amp", s_amp},     {"correlation", s_corr}, {"manifest", manifest}};
    handler = cmd_synth;
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    cfg = merge_config(cfg, config_path);
    auto require = [&](const char* key) {
      if (cfg.contains(key) && cfg[key].is_string() && cfg[key].get<std::string>().empty())
        throw Error(ErrorCode::InvalidSpec, std::string("--") + key + " is required");
    };
    for (const char* key : {"input", "features", "model", "out-dir"}) require(key);
    return handler(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_numerical() ? kExitNumerical : kExitInput;
  } catch (const json::exception& e) {
    err << "error [config]: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return kExitInput;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace fcoc::cli
