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

#include "fedrep/metrics.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <ostream>

#include "csv.hpp"
#include "fedrep/error.hpp"

namespace fedrep::metrics {

double mse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw ShapeError("mse: length mismatch (" + std::to_string(actual.size()) + " vs " +
                     std::to_string(predicted.size()) + ")");
  }
  if (actual.empty()) throw Error("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    sum += r * r;
  }
  return sum / static_cast<double>(actual.size());
}

EvalResult evaluate_holdout(const lstm::ModelParams& params, const data::WindowedDataset& holdout,
                            ScaleMode mode, const std::optional<data::ScalingParams>& scaler) {
  if (holdout.empty()) throw Error("holdout dataset is empty");
  if (mode == ScaleMode::kRaw && !scaler) {
    throw Error("raw-scale evaluation needs the holdout scaler");
  }
  const auto count = holdout.count();
  const auto horizon = holdout.lookahead;
  EvalResult r;
  r.actual = holdout.targets;
  r.predicted.assign(count * horizon, 0.0);

  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto pred = lstm::predict(params, holdout.input(static_cast<std::size_t>(i)));
      if (pred.size() != horizon) throw ShapeError("model horizon does not match holdout targets");
      std::copy(pred.begin(), pred.end(), r.predicted.begin() + i * static_cast<std::ptrdiff_t>(horizon));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  if (mode == ScaleMode::kRaw) {
    for (auto& v : r.actual) v = scaler->unscale(v);
    for (auto& v : r.predicted) v = scaler->unscale(v);
  }
  r.n_predictions = r.actual.size();
  r.mse = mse(r.actual, r.predicted);
  r.per_horizon_mse.assign(horizon, 0.0);
  for (std::size_t k = 0; k < horizon; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = r.actual[i * horizon + k] - r.predicted[i * horizon + k];
      s += d * d;
    }
    r.per_horizon_mse[k] = s / static_cast<double>(count);
  }
  return r;
}

ScenarioSummary summarize_scenario(std::string scenario_id, std::size_t n_retailers,
                                   std::span<const RunOutcome> runs) {
  if (runs.empty()) throw Error("scenario summary needs at least one run");
  ScenarioSummary s;
  s.scenario_id = std::move(scenario_id);
  s.n_retailers = n_retailers;
  s.min_mse = runs.front().holdout_mse;
  s.max_mse = runs.front().holdout_mse;
  double sum = 0.0;
  double rounds = 0.0;
  for (const auto& r : runs) {
    s.min_mse = std::min(s.min_mse, r.holdout_mse);
    s.max_mse = std::max(s.max_mse, r.holdout_mse);
    sum += r.holdout_mse;
    rounds += static_cast<double>(r.rounds);
  }
  const auto n = static_cast<double>(runs.size());
  s.mean_mse = std::clamp(sum / n, s.min_mse, s.max_mse);
  s.rounds_to_convergence = rounds / n;
  return s;
}

void write_summary_header(std::ostream& out) {
  out << "scenario,n_retailers,min_mse,max_mse,mean_mse,rounds_to_convergence,mse_scale\n";
}

void write_summary_row(std::ostream& out, const ScenarioSummary& s, ScaleMode mode) {
  out << s.scenario_id << ',' << s.n_retailers << ',' << csv::format_double(s.min_mse) << ','
      << csv::format_double(s.max_mse) << ',' << csv::format_double(s.mean_mse) << ','
      << csv::format_double(s.rounds_to_convergence) << ',' << to_string(mode) << '\n';
}

void write_predictions(const std::filesystem::path& path, const data::WindowedDataset& holdout,
                       const EvalResult& eval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "timestamp,horizon,actual,predicted\n";
  const auto horizon = holdout.lookahead;
  for (std::size_t i = 0; i < holdout.count(); ++i) {
    for (std::size_t k = 0; k < horizon; ++k) {
      const Timestamp t{holdout.target_start[i].minutes +
                        static_cast<std::int64_t>(k) * kHalfHourMinutes};
      out << format_timestamp(t) << ',' << (k + 1) << ','
          << csv::format_double(eval.actual[i * horizon + k]) << ','
          << csv::format_double(eval.predicted[i * horizon + k]) << '\n';
    }
  }
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::string to_string(ScaleMode mode) { return mode == ScaleMode::kScaled ? "scaled" : "raw"; }

}  // namespace fedrep::metrics
