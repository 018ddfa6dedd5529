// Copyright 2026 The FedREP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedrep/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "csv.hpp"
#include "fedrep/error.hpp"

namespace fedrep::data {

namespace {

constexpr std::string_view kLongHeader =
    "customer_id,category,postcode,timestamp,consumption_kwh";
constexpr std::size_t kSlotsPerDay = 48;

Category parse_category(std::string_view s) {
  return s == "GC" ? Category::kGeneralConsumption : Category::kOther;
}

std::string path_string(const std::filesystem::path& p) { return p.string(); }

double parse_consumption(std::string_view cell, const std::string& path,
                         std::size_t line) {
  const auto v = csv::to_double(cell);
  if (!v) throw ParseError(path, line, "unparsable consumption '" + std::string(cell) + "'");
  if (!std::isfinite(*v) || *v < 0.0) {
    throw ParseError(path, line, "negative or non-finite consumption '" +
                                     std::string(cell) + "'");
  }
  return *v;
}

std::vector<RawReading> parse_long(std::ifstream& in, const std::string& path) {
  std::vector<RawReading> out;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header row");
  if (csv::trim(line) != kLongHeader) {
    throw ParseError(path, 1, "unexpected header, want '" + std::string(kLongHeader) + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 5) {
      throw ParseError(path, line_no, "expected 5 fields, got " + std::to_string(f.size()));
    }
    RawReading r;
    r.customer_id = std::string(f[0]);
    r.category = parse_category(f[1]);
    const auto pc = csv::to_int<int>(f[2]);
    if (!pc) throw ParseError(path, line_no, "unparsable postcode '" + std::string(f[2]) + "'");
    r.postcode = *pc;
    const auto ts = parse_timestamp(f[3]);
    if (!ts) throw ParseError(path, line_no, "unparsable timestamp '" + std::string(f[3]) + "'");
    if (!is_half_hour_aligned(*ts)) {
      throw ParseError(path, line_no, "timestamp not on a half-hour boundary");
    }
    r.timestamp = *ts;
    r.consumption_kwh = parse_consumption(f[4], path, line_no);
    out.push_back(std::move(r));
  }
  return out;
}

// Accepts d/m/yyyy with one- or two-digit day and month.
std::optional<Timestamp> parse_ausgrid_date(std::string_view s) {
  const auto a = s.find('/');
  const auto b = s.find('/', a == std::string_view::npos ? a : a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos) return std::nullopt;
  const auto d = csv::to_int<unsigned>(s.substr(0, a));
  const auto m = csv::to_int<unsigned>(s.substr(a + 1, b - a - 1));
  const auto y = csv::to_int<int>(s.substr(b + 1));
  if (!d || !m || !y || *y < 1900) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                        std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return make_timestamp(*y, *m, *d);
}

// The release starts with a title line; the real header is the first line
// naming "Consumption Category". Slot k (0-based) is the half hour that
// starts at k*30 minutes past midnight.
std::vector<RawReading> parse_ausgrid_wide(std::ifstream& in, const std::string& path) {
  std::vector<RawReading> out;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t first_slot = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!have_header) {
      if (line.find("Consumption Category") == std::string::npos) {
        if (line_no >= 5) break;
        continue;
      }
      const auto h = csv::split(line);
      if (h.size() < 5 + kSlotsPerDay || h[0] != "Customer" || h[2] != "Postcode" ||
          h[3] != "Consumption Category" || h[4] != "date" || h[5] != "0:30" ||
          h[4 + kSlotsPerDay] != "0:00") {
        throw ParseError(path, line_no,
                         "unrecognised Ausgrid header; want Customer,Generator "
                         "Capacity,Postcode,Consumption Category,date,0:30,...,0:00");
      }
      first_slot = 5;
      have_header = true;
      continue;
    }
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() < first_slot + kSlotsPerDay) {
      throw ParseError(path, line_no, "expected at least " +
                                          std::to_string(first_slot + kSlotsPerDay) +
                                          " fields, got " + std::to_string(f.size()));
    }
    const auto pc = csv::to_int<int>(f[2]);
    if (!pc) throw ParseError(path, line_no, "unparsable postcode '" + std::string(f[2]) + "'");
    const auto day = parse_ausgrid_date(f[4]);
    if (!day) throw ParseError(path, line_no, "unparsable date '" + std::string(f[4]) + "'");
    const auto category = parse_category(f[3]);
    for (std::size_t k = 0; k < kSlotsPerDay; ++k) {
      RawReading r;
      r.customer_id = std::string(f[0]);
      r.category = category;
      r.postcode = *pc;
      r.timestamp = Timestamp{day->minutes + static_cast<std::int64_t>(k) * kHalfHourMinutes};
      r.consumption_kwh = parse_consumption(f[first_slot + k], path, line_no);
      out.push_back(std::move(r));
    }
  }
  if (!have_header) throw ParseError(path, line_no, "no Ausgrid header row found");
  return out;
}

}  // namespace

void WindowedDataset::push_back(std::span<const double> in,
                                std::span<const double> out, Timestamp start) {
  if (in.size() != lookback || out.size() != lookahead) {
    throw ShapeError("window shape does not match dataset");
  }
  inputs.insert(inputs.end(), in.begin(), in.end());
  targets.insert(targets.end(), out.begin(), out.end());
  target_start.push_back(start);
}

std::vector<RawReading> load_readings(const std::filesystem::path& path,
                                      CsvLayout layout) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path_string(path) + "' for reading");
  return layout == CsvLayout::kLong ? parse_long(in, path_string(path))
                                    : parse_ausgrid_wide(in, path_string(path));
}

void write_readings(const std::filesystem::path& path,
                    std::span<const RawReading> readings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path_string(path) + "' for writing");
  out << kLongHeader << '\n';
  for (const auto& r : readings) {
    out << r.customer_id << ','
        << (r.category == Category::kGeneralConsumption ? "GC" : "CL") << ','
        << r.postcode << ',' << format_timestamp(r.timestamp) << ','
        << csv::format_double(r.consumption_kwh) << '\n';
  }
  if (!out) throw Error("write to '" + path_string(path) + "' failed");
}

std::vector<RawReading> filter_gc(std::span<const RawReading> readings) {
  std::vector<RawReading> out;
  std::copy_if(readings.begin(), readings.end(), std::back_inserter(out),
               [](const RawReading& r) { return r.category == Category::kGeneralConsumption; });
  return out;
}

RetailerSeries aggregate_by_postcode(std::span<const RawReading> readings,
                                     int postcode, GapPolicy gaps) {
  struct Contribution {
    Timestamp t;
    std::string_view customer;
    double value;
  };
  std::vector<Contribution> parts;
  for (const auto& r : readings) {
    if (r.postcode == postcode) parts.push_back({r.timestamp, r.customer_id, r.consumption_kwh});
  }
  if (parts.empty()) {
    throw Error("no readings for postcode " + std::to_string(postcode));
  }
  std::sort(parts.begin(), parts.end(), [](const Contribution& a, const Contribution& b) {
    return std::tie(a.t, a.customer, a.value) < std::tie(b.t, b.customer, b.value);
  });

  RetailerSeries s;
  s.postcode = postcode;
  for (const auto& p : parts) {
    if (s.timestamps.empty() || s.timestamps.back() != p.t) {
      s.timestamps.push_back(p.t);
      s.values.push_back(p.value);
    } else {
      s.values.back() += p.value;
    }
  }

  RetailerSeries filled;
  filled.postcode = postcode;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) {
      const auto gap = s.timestamps[i].minutes - s.timestamps[i - 1].minutes;
      if (gap != kHalfHourMinutes) {
        if (gaps == GapPolicy::kError) {
          throw Error("postcode " + std::to_string(postcode) + ": missing readings between " +
                      format_timestamp(s.timestamps[i - 1]) + " and " +
                      format_timestamp(s.timestamps[i]));
        }
        for (auto t = s.timestamps[i - 1].minutes + kHalfHourMinutes; t < s.timestamps[i].minutes;
             t += kHalfHourMinutes) {
          filled.timestamps.push_back(Timestamp{t});
          filled.values.push_back(filled.values.back());
        }
      }
    }
    filled.timestamps.push_back(s.timestamps[i]);
    filled.values.push_back(s.values[i]);
  }
  return filled;
}

std::pair<RetailerSeries, RetailerSeries> split(const RetailerSeries& series,
                                                double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1)");
  }
  const auto n = series.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  if (n < 2 || n_train == 0 || n_train == n) {
    throw Error("series of length " + std::to_string(n) +
                " is too short for a non-empty train/test split");
  }
  RetailerSeries train{series.postcode,
                       {series.timestamps.begin(), series.timestamps.begin() + n_train},
                       {series.values.begin(), series.values.begin() + n_train}};
  RetailerSeries test{series.postcode,
                      {series.timestamps.begin() + n_train, series.timestamps.end()},
                      {series.values.begin() + n_train, series.values.end()}};
  return {std::move(train), std::move(test)};
}

ScalingParams fit_scaler(const RetailerSeries& train) {
  if (train.values.empty()) throw Error("cannot fit a scaler on an empty series");
  const auto [lo, hi] = std::minmax_element(train.values.begin(), train.values.end());
  if (!(*hi > *lo)) {
    throw Error("constant series (min == max == " + csv::format_double(*lo) +
                "); cannot scale");
  }
  return ScalingParams{*lo, *hi};
}

RetailerSeries apply_scaler(const RetailerSeries& series, const ScalingParams& p) {
  if (!(p.max > p.min)) throw Error("invalid scaling parameters (max <= min)");
  RetailerSeries out = series;
  for (auto& v : out.values) v = p.scale(v);
  return out;
}

WindowedDataset make_windows(const RetailerSeries& series, std::size_t lookback,
                             std::size_t lookahead) {
  if (lookback == 0 || lookahead == 0) throw Error("lookback and lookahead must be positive");
  const auto n = series.size();
  if (n < lookback + lookahead) {
    throw Error("series of length " + std::to_string(n) + " is shorter than lookback + lookahead (" +
                std::to_string(lookback + lookahead) + ")");
  }
  WindowedDataset ds;
  ds.lookback = lookback;
  ds.lookahead = lookahead;
  const auto count = n - lookback - lookahead + 1;
  ds.inputs.reserve(count * lookback);
  ds.targets.reserve(count * lookahead);
  ds.target_start.reserve(count);
  const std::span<const double> v(series.values);
  for (std::size_t i = 0; i < count; ++i) {
    ds.push_back(v.subspan(i, lookback), v.subspan(i + lookback, lookahead),
                 series.timestamps[i + lookback]);
  }
  return ds;
}

WindowedDataset concat(std::span<const WindowedDataset> parts) {
  WindowedDataset out;
  if (parts.empty()) return out;
  out.lookback = parts.front().lookback;
  out.lookahead = parts.front().lookahead;
  for (const auto& p : parts) {
    if (p.lookback != out.lookback || p.lookahead != out.lookahead) {
      throw ShapeError("cannot pool datasets with different window shapes");
    }
    out.inputs.insert(out.inputs.end(), p.inputs.begin(), p.inputs.end());
    out.targets.insert(out.targets.end(), p.targets.begin(), p.targets.end());
    out.target_start.insert(out.target_start.end(), p.target_start.begin(), p.target_start.end());
  }
  return out;
}

PreparedRetailer prepare_retailer(std::span<const RawReading> gc_readings,
                                  int postcode, double train_fraction,
                                  std::size_t lookback, std::size_t lookahead,
                                  GapPolicy gaps) {
  const auto series = aggregate_by_postcode(gc_readings, postcode, gaps);
  auto [train, test] = split(series, train_fraction);
  PreparedRetailer rep;
  rep.postcode = postcode;
  rep.scaler = fit_scaler(train);
  rep.train = make_windows(apply_scaler(train, rep.scaler), lookback, lookahead);
  rep.test = make_windows(apply_scaler(test, rep.scaler), lookback, lookahead);
  return rep;
}

}  // namespace fedrep::data
