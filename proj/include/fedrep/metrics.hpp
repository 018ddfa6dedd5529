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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedrep/data_pipeline.hpp"
#include "fedrep/lstm_model.hpp"

namespace fedrep::metrics {

// (1/N) sum (actual_i - predicted_i)^2
double mse(std::span<const double> actual, std::span<const double> predicted);

enum class ScaleMode { kScaled, kRaw };

struct EvalResult {
  double mse = 0.0;
  std::vector<double> per_horizon_mse;
  std::size_t n_predictions = 0;
  // Row-major count x lookahead, in the same units as the MSE.
  std::vector<double> actual;
  std::vector<double> predicted;
};

// Inference-mode forecast for every window. kRaw maps predictions and targets
// back to kWh through `scaler` before scoring.
EvalResult evaluate_holdout(const lstm::ModelParams& params,
                            const data::WindowedDataset& holdout,
                            ScaleMode mode = ScaleMode::kScaled,
                            const std::optional<data::ScalingParams>& scaler = std::nullopt);

struct ScenarioSummary {
  std::string scenario_id;
  std::size_t n_retailers = 0;
  double min_mse = 0.0;
  double max_mse = 0.0;
  double mean_mse = 0.0;
  double rounds_to_convergence = 0.0;  // mean over runs
};

struct RunOutcome {
  std::size_t rounds = 0;
  double holdout_mse = 0.0;
};

ScenarioSummary summarize_scenario(std::string scenario_id, std::size_t n_retailers,
                                   std::span<const RunOutcome> runs);

// scenario,n_retailers,min_mse,max_mse,mean_mse,rounds_to_convergence,mse_scale
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const ScenarioSummary& s, ScaleMode mode);

// timestamp,horizon,actual,predicted
void write_predictions(const std::filesystem::path& path, const data::WindowedDataset& holdout,
                       const EvalResult& eval);

std::string to_string(ScaleMode mode);

}  // namespace fedrep::metrics
