#pragma once

// Daily market features from intraday returns: realized volatility, bipower
// variation, log returns, volatility increments, and train-only min-max
// scaling.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fcoc/error.hpp"

namespace fcoc::market {

using Date = std::chrono::year_month_day;

/// Parses the leading "YYYY-MM-DD" of a date or timestamp field.
inline std::optional<Date> parse_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto ok = [](std::string_view s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  };
  if (!ok(text.substr(0, 4), y) || !ok(text.substr(5, 2), m) || !ok(text.substr(8, 2), d)) return std::nullopt;
  if (text.size() > 10 && text[10] != ' ' && text[10] != 'T') return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  const int y = static_cast<int>(d.year());
  const auto m = static_cast<unsigned>(d.month());
  const auto day = static_cast<unsigned>(d.day());
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, day);
  return buf;
}

struct IntradayDay {
  Date date;
  std::vector<double> returns;  // percent log returns
};

struct DailySeries {
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (dates.size() != values.size())
      throw Error(ErrorCode::UnalignedSeries, "dates and values differ in length");
    for (std::size_t i = 1; i < dates.size(); ++i)
      if (!(dates[i - 1] < dates[i]))
        throw Error(ErrorCode::UnalignedSeries, "dates must be strictly increasing (at " + format_date(dates[i]) + ")");
  }
};

/// Percent log returns, one shorter than the price series.
inline DailySeries log_returns(const DailySeries& prices) {
  prices.validate();
  if (prices.size() < 2) throw Error(ErrorCode::TooShort, "log returns need at least 2 prices");
  for (std::size_t i = 0; i < prices.size(); ++i)
    if (!(prices.values[i] > 0.0))
      throw Error(ErrorCode::NonPositivePrice, "price on " + format_date(prices.dates[i]) + " is not positive");
  DailySeries out;
  for (std::size_t i = 1; i < prices.size(); ++i) {
    out.dates.push_back(prices.dates[i]);
    out.values.push_back(100.0 * (std::log(prices.values[i]) - std::log(prices.values[i - 1])));
  }
  return out;
}

inline double realized_volatility(const IntradayDay& day) {
  if (day.returns.empty()) throw Error(ErrorCode::EmptyDay, "no intraday returns on " + format_date(day.date));
  double rv = 0.0;
  for (double r : day.returns) rv += r * r;
  return rv;
}

inline double bipower_variation(const IntradayDay& day) {
  if (day.returns.size() < 2)
    throw Error(ErrorCode::TooFewReturns, "bipower variation needs 2 returns on " + format_date(day.date));
  double acc = 0.0;
  for (std::size_t j = 1; j < day.returns.size(); ++j) acc += std::abs(day.returns[j]) * std::abs(day.returns[j - 1]);
  // mu1^-2 with mu1 = sqrt(2/pi)
  return 0.5 * std::numbers::pi * acc;
}

/// Half log-differences of BPV; one shorter than the input.
inline DailySeries volatility_increment(const DailySeries& bpv) {
  bpv.validate();
  if (bpv.size() < 2) throw Error(ErrorCode::TooShort, "volatility increments need at least 2 days");
  for (std::size_t i = 0; i < bpv.size(); ++i)
    if (!(bpv.values[i] > 0.0))
      throw Error(ErrorCode::NonPositiveBPV, "bipower variation on " + format_date(bpv.dates[i]) + " is not positive");
  DailySeries out;
  for (std::size_t i = 1; i < bpv.size(); ++i) {
    out.dates.push_back(bpv.dates[i]);
    out.values.push_back(std::log(std::sqrt(bpv.values[i])) - std::log(std::sqrt(bpv.values[i - 1])));
  }
  return out;
}

/// Replaces zero BPV days by the smallest positive BPV in the sample.
/// Returns how many days were replaced.
inline std::size_t repair_zero_bpv(DailySeries& bpv) {
  double floor = 0.0;
  for (double v : bpv.values)
    if (v > 0.0 && (floor == 0.0 || v < floor)) floor = v;
  if (floor == 0.0) throw Error(ErrorCode::NonPositiveBPV, "every day has zero bipower variation");
  std::size_t replaced = 0;
  for (double& v : bpv.values) {
    if (v == 0.0) {
      v = floor;
      ++replaced;
    }
  }
  return replaced;
}

/// One row of the daily feature table.
struct FeatureRow {
  Date date;
  double rv = 0.0;
  double bpv = 0.0;
  double r = 0.0;
  double v = 0.0;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::size_t repaired_bpv_days = 0;
};

/// Builds `date,rv,bpv,r,v` rows from intraday data. Daily returns come from
/// closing prices when given, otherwise from the sum of the day's intraday
/// log returns. The first day only seeds the differences.
inline FeatureTable compute_features(std::span<const IntradayDay> days,
                                     std::optional<std::span<const double>> closes = std::nullopt) {
  if (days.size() < 2) throw Error(ErrorCode::TooShort, "features need at least 2 trading days");
  if (closes && closes->size() != days.size())
    throw Error(ErrorCode::UnalignedSeries, "one closing price per day is required");

  DailySeries bpv;
  std::vector<double> rv;
  for (const auto& day : days) {
    rv.push_back(realized_volatility(day));
    bpv.dates.push_back(day.date);
    bpv.values.push_back(bipower_variation(day));
  }
  bpv.validate();
  FeatureTable table;
  table.repaired_bpv_days = repair_zero_bpv(bpv);
  const auto v = volatility_increment(bpv);

  std::vector<double> r(days.size() - 1);
  if (closes) {
    DailySeries prices{bpv.dates, std::vector<double>(closes->begin(), closes->end())};
    r = log_returns(prices).values;
  } else {
    for (std::size_t i = 1; i < days.size(); ++i) {
      double sum = 0.0;
      for (double x : days[i].returns) sum += x;
      r[i - 1] = sum;
    }
  }
  for (std::size_t i = 1; i < days.size(); ++i)
    table.rows.push_back({days[i].date, rv[i], bpv.values[i], r[i - 1], v.values[i - 1]});
  return table;
}

/// Column-wise affine map onto [0, 1] learned from training rows only.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {}

  static MinMaxScaler fit(std::span<const std::vector<double>> train_rows) {
    if (train_rows.empty()) throw Error(ErrorCode::InsufficientData, "min-max fit needs at least one training row");
    const std::size_t width = train_rows.front().size();
    std::vector<double> lo(train_rows.front());
    std::vector<double> hi(train_rows.front());
    for (const auto& row : train_rows) {
      if (row.size() != width) throw Error(ErrorCode::LengthMismatch, "training rows differ in width");
      for (std::size_t c = 0; c < width; ++c) {
        lo[c] = std::min(lo[c], row[c]);
        hi[c] = std::max(hi[c], row[c]);
      }
    }
    for (std::size_t c = 0; c < width; ++c)
      if (!(hi[c] > lo[c])) throw Error(ErrorCode::ConstantFeature, "feature " + std::to_string(c) + " is constant");
    return MinMaxScaler(std::move(lo), std::move(hi));
  }

  std::size_t width() const { return lo_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  double apply(std::size_t c, double x) const { return (x - lo_[c]) / (hi_[c] - lo_[c]); }
  double invert(std::size_t c, double x) const { return x * (hi_[c] - lo_[c]) + lo_[c]; }

  /// No clamping: rows outside the training range map outside [0, 1].
  std::vector<std::vector<double>> apply(std::span<const std::vector<double>> rows) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      if (row.size() != width()) throw Error(ErrorCode::LengthMismatch, "row width differs from the scaler");
      std::vector<double> scaled(row.size());
      for (std::size_t c = 0; c < row.size(); ++c) scaled[c] = apply(c, row[c]);
      out.push_back(std::move(scaled));
    }
    return out;
  }

  std::vector<std::vector<double>> invert(std::span<const std::vector<double>> rows) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      std::vector<double> raw(row.size());
      for (std::size_t c = 0; c < row.size(); ++c) raw[c] = invert(c, row[c]);
      out.push_back(std::move(raw));
    }
    return out;
  }

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

inline MinMaxScaler minmax_fit(std::span<const std::vector<double>> train_rows) { return MinMaxScaler::fit(train_rows); }

inline std::vector<std::vector<double>> minmax_apply(const MinMaxScaler& scaler,
                                                     std::span<const std::vector<double>> rows) {
  return scaler.apply(rows);
}

}  // namespace fcoc::market
