#pragma once

// CSV readers and writers for the feature, Hurst, oscillator and prediction
// tables. Numbers are written in shortest round-trip form.

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcoc/chaos.hpp"
#include "fcoc/error.hpp"
#include "fcoc/fractal.hpp"
#include "fcoc/forecaster.hpp"
#include "fcoc/market.hpp"

namespace fcoc::io {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

[[noreturn]] inline void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line) + ": " + what);
}

/// A CSV table with a header row; empty fields become NaN.
struct Table {
  std::vector<std::string> header;
  std::vector<market::Date> dates;
  std::vector<std::vector<double>> columns;  // excludes the date column

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t c = 1; c < header.size(); ++c)
      if (header[c] == name) return c - 1;
    return std::nullopt;
  }
};

/// Reads a table whose first column is an ISO date.
inline Table read_dated_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      if (t.header.size() < 2) malformed(lineno, "header needs a date column and at least one value column");
      t.columns.resize(t.header.size() - 1);
      continue;
    }
    if (fields.size() != t.header.size())
      malformed(lineno, "expected " + std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    const auto date = market::parse_date(fields[0]);
    if (!date) malformed(lineno, "bad date '" + std::string(fields[0]) + "'");
    if (!t.dates.empty() && !(t.dates.back() < *date)) malformed(lineno, "dates must be strictly increasing");
    t.dates.push_back(*date);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        t.columns[c - 1].push_back(forecast::kMissing);
        continue;
      }
      const auto v = parse_number(fields[c]);
      if (!v) malformed(lineno, "bad number '" + std::string(fields[c]) + "' in column " + t.header[c]);
      t.columns[c - 1].push_back(*v);
    }
  }
  if (t.header.empty()) malformed(lineno, "empty file");
  return t;
}

inline forecast::FeatureFrame to_frame(const Table& t) {
  forecast::FeatureFrame f;
  f.dates = t.dates;
  f.names.assign(t.header.begin() + 1, t.header.end());
  f.columns = t.columns;
  return f;
}

/// Left join of `extra` onto `base` by date; unmatched days become NaN.
inline forecast::FeatureFrame join_by_date(const forecast::FeatureFrame& base, const forecast::FeatureFrame& extra) {
  forecast::FeatureFrame out = base;
  std::vector<std::vector<double>> added(extra.columns.size(),
                                         std::vector<double>(base.size(), forecast::kMissing));
  std::size_t j = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    while (j < extra.size() && extra.dates[j] < base.dates[i]) ++j;
    if (j < extra.size() && extra.dates[j] == base.dates[i])
      for (std::size_t c = 0; c < extra.columns.size(); ++c) added[c][i] = extra.columns[c][j];
  }
  for (std::size_t c = 0; c < extra.columns.size(); ++c) {
    out.names.push_back(extra.names[c]);
    out.columns.push_back(std::move(added[c]));
  }
  return out;
}

struct IntradayInput {
  std::vector<market::IntradayDay> days;
  std::optional<std::vector<double>> closes;  // present for price input
};

/// Reads `timestamp,price` (returns formed within each day) or
/// `date,ret_pct` (returns taken as given).
inline IntradayInput read_intraday_csv(std::istream& in) {
  IntradayInput out;
  std::string line;
  std::size_t lineno = 0;
  enum class Kind { unknown, prices, returns } kind = Kind::unknown;
  double prev_price = 0.0;
  std::vector<double> closes;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (kind == Kind::unknown) {
      if (fields.size() == 2 && fields[0] == "timestamp" && fields[1] == "price")
        kind = Kind::prices;
      else if (fields.size() == 2 && fields[0] == "date" && fields[1] == "ret_pct")
        kind = Kind::returns;
      else
        malformed(lineno, "header must be 'timestamp,price' or 'date,ret_pct'");
      continue;
    }
    if (fields.size() != 2) malformed(lineno, "expected 2 fields");
    const auto date = market::parse_date(fields[0]);
    if (!date) malformed(lineno, "bad timestamp '" + std::string(fields[0]) + "'");
    const auto value = parse_number(fields[1]);
    if (!value || !std::isfinite(*value)) malformed(lineno, "bad number '" + std::string(fields[1]) + "'");

    const bool new_day = out.days.empty() || out.days.back().date != *date;
    if (!out.days.empty() && new_day && !(out.days.back().date < *date))
      malformed(lineno, "rows must be in chronological order");
    if (kind == Kind::prices) {
      if (!(*value > 0.0)) malformed(lineno, "non-positive price " + std::string(fields[1]));
      if (new_day) {
        out.days.push_back({*date, {}});
        closes.push_back(*value);
      } else {
        out.days.back().returns.push_back(100.0 * (std::log(*value) - std::log(prev_price)));
        closes.back() = *value;
      }
      prev_price = *value;
    } else {
      if (new_day) out.days.push_back({*date, {}});
      out.days.back().returns.push_back(*value);
    }
  }
  if (kind == Kind::unknown) malformed(lineno, "empty file");
  for (const auto& day : out.days)
    if (day.returns.size() < 2)
      throw Error(ErrorCode::TooFewReturns, "day " + market::format_date(day.date) + " has fewer than 2 intraday returns");
  if (kind == Kind::prices) out.closes = std::move(closes);
  return out;
}

inline void write_intraday_returns(std::ostream& out, std::span<const market::IntradayDay> days) {
  out << "date,ret_pct\n";
  for (const auto& day : days)
    for (double r : day.returns) out << market::format_date(day.date) << ',' << format_number(r) << '\n';
}

inline void write_features_csv(std::ostream& out, const market::FeatureTable& table) {
  out << "date,rv,bpv,r,v\n";
  for (const auto& row : table.rows)
    out << market::format_date(row.date) << ',' << format_number(row.rv) << ',' << format_number(row.bpv) << ','
        << format_number(row.r) << ',' << format_number(row.v) << '\n';
}

inline void write_hurst_csv(std::ostream& out, std::span<const market::Date> dates, const fractal::RollingHurst& h) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  out << "date,h_overall,h_positive,h_negative\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out << market::format_date(dates[h.end_index(i)]) << ',' << opt(h.overall[i]) << ',' << opt(h.positive[i]) << ','
        << opt(h.negative[i]) << '\n';
}

inline void write_bifurcation_csv(std::ostream& out, std::span<const chaos::BifurcationPoint> points) {
  out << "input,value\n";
  for (const auto& p : points) out << format_number(p.input) << ',' << format_number(p.value) << '\n';
}

/// `labels` names the rows (default t1..tN).
inline void write_lut_csv(std::ostream& out, const chaos::MetaActivationLUT& lut,
                          std::span<const std::string> labels = {}) {
  out << "knot";
  for (std::size_t t = 0; t < lut.rows().size(); ++t) {
    if (t < labels.size())
      out << ',' << labels[t];
    else
      out << ",t" << t + 1;
  }
  out << ",envelope\n";
  for (std::size_t j = 0; j < lut.size(); ++j) {
    out << format_number(lut.knots()[j]);
    for (const auto& row : lut.rows()) out << ',' << format_number(row[j]);
    out << ',' << format_number(lut.envelope()[j]) << '\n';
  }
}

inline void write_predictions_csv(std::ostream& out, std::span<const market::Date> dates,
                                  std::span<const double> actual, std::span<const double> predicted) {
  out << "date,actual,predicted\n";
  for (std::size_t i = 0; i < dates.size(); ++i)
    out << market::format_date(dates[i]) << ',' << format_number(actual[i]) << ',' << format_number(predicted[i])
        << '\n';
}

}  // namespace fcoc::io
