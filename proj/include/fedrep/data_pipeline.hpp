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

#pragma once

// Smart-meter ingestion and supervised framing for one retailer (REP):
// GC filter -> per-postcode sum -> chronological split -> min-max scaling
// fitted on the train split -> sliding windows.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedrep/timestamp.hpp"

namespace fedrep::data {

enum class Category { kGeneralConsumption, kOther };

struct RawReading {
  std::string customer_id;
  Category category = Category::kOther;
  int postcode = 0;
  Timestamp timestamp;
  double consumption_kwh = 0.0;

  bool operator==(const RawReading&) const = default;
};

// Aggregated half-hourly load of every customer in one postcode.
struct RetailerSeries {
  int postcode = 0;
  std::vector<Timestamp> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const RetailerSeries&) const = default;
};

struct ScalingParams {
  double min = 0.0;
  double max = 1.0;

  double scale(double x) const { return (x - min) / (max - min); }
  double unscale(double s) const { return s * (max - min) + min; }
  bool operator==(const ScalingParams&) const = default;
};

// (lookback input, lookahead target) pairs, stored flat and row-major.
struct WindowedDataset {
  std::size_t lookback = 0;
  std::size_t lookahead = 0;
  std::vector<double> inputs;   // count * lookback
  std::vector<double> targets;  // count * lookahead
  // Instant of the first target step of each pair.
  std::vector<Timestamp> target_start;

  std::size_t count() const { return target_start.size(); }
  bool empty() const { return target_start.empty(); }

  std::span<const double> input(std::size_t i) const {
    return {inputs.data() + i * lookback, lookback};
  }
  std::span<const double> target(std::size_t i) const {
    return {targets.data() + i * lookahead, lookahead};
  }

  void push_back(std::span<const double> in, std::span<const double> out,
                 Timestamp start);

  bool operator==(const WindowedDataset&) const = default;
};

enum class CsvLayout {
  // customer_id,category,postcode,timestamp,consumption_kwh
  kLong,
  // Ausgrid solar-home release: one row per customer-day, 48 half-hour columns.
  kAusgridWide,
};

enum class GapPolicy { kError, kForwardFill };

inline constexpr std::size_t kDefaultLookback = 12;
inline constexpr std::size_t kDefaultLookahead = 5;
inline constexpr double kDefaultTrainFraction = 0.7;

std::vector<RawReading> load_readings(const std::filesystem::path& path,
                                      CsvLayout layout = CsvLayout::kLong);

// Writes readings in the long layout accepted by load_readings.
void write_readings(const std::filesystem::path& path,
                    std::span<const RawReading> readings);

std::vector<RawReading> filter_gc(std::span<const RawReading> readings);

// Sums consumption across customers per timestamp. Per-timestamp sums are
// taken in (customer_id, value) order so the result does not depend on row
// order.
RetailerSeries aggregate_by_postcode(std::span<const RawReading> readings,
                                     int postcode,
                                     GapPolicy gaps = GapPolicy::kError);

std::pair<RetailerSeries, RetailerSeries> split(const RetailerSeries& series,
                                                double train_fraction);

ScalingParams fit_scaler(const RetailerSeries& train);

// Unclamped: values outside the fitted range map outside [0, 1].
RetailerSeries apply_scaler(const RetailerSeries& series, const ScalingParams& p);

WindowedDataset make_windows(const RetailerSeries& series,
                             std::size_t lookback = kDefaultLookback,
                             std::size_t lookahead = kDefaultLookahead);

// Concatenates datasets in the given order; all must share window shape.
WindowedDataset concat(std::span<const WindowedDataset> parts);

// Everything one REP needs after preparation.
struct PreparedRetailer {
  int postcode = 0;
  ScalingParams scaler;
  WindowedDataset train;
  WindowedDataset test;
};

PreparedRetailer prepare_retailer(std::span<const RawReading> gc_readings,
                                  int postcode, double train_fraction,
                                  std::size_t lookback, std::size_t lookahead,
                                  GapPolicy gaps);

}  // namespace fedrep::data
