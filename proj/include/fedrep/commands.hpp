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

// Subcommand bodies behind the `fedrep` executable. Output layout under
// config.output_dir:
//
//   prepared/rep_<postcode>.csv          windowed train/test pairs
//   prepared/rep_<postcode>_scaler.json  min/max fitted on the train split
//   federated/rounds_run<i>.csv          round,avg_loss,loss_client_<id>...,checksum
//   federated/final_run<i>.frep          final global parameters
//   federated/holdout_runs.csv           per-run holdout MSE
//   federated/eval.csv                   run 0 holdout evaluation
//   federated/predictions_<postcode>.csv run 0 holdout forecasts
//   federated/scenario_summary.csv       min/max/mean MSE over runs
//   centralized/epochs.csv, final.frep, eval.csv, predictions_<postcode>.csv
//   comparison.csv, comparison_summary.csv

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fedrep/config.hpp"
#include "fedrep/data_pipeline.hpp"
#include "fedrep/fed_core.hpp"
#include "fedrep/metrics.hpp"

namespace fedrep::commands {

struct PrepareResult {
  std::vector<data::PreparedRetailer> retailers;  // training postcodes, then holdout
};

PrepareResult cmd_prepare(const config::ScenarioConfig& cfg, bool synthetic, std::ostream& out);

void write_prepared(const std::filesystem::path& dir, const data::PreparedRetailer& rep);
data::PreparedRetailer load_prepared(const std::filesystem::path& dir, int postcode);

struct FederatedResult {
  std::vector<fed::TrainingRun> runs;
  std::vector<metrics::EvalResult> holdout_scaled;
  std::vector<metrics::EvalResult> holdout_raw;
  metrics::ScenarioSummary summary_scaled;
  metrics::ScenarioSummary summary_raw;
};

FederatedResult cmd_run_federated(const config::ScenarioConfig& cfg, std::ostream& out);

struct CentralizedRunResult {
  fed::CentralizedResult training;
  metrics::EvalResult holdout_scaled;
  metrics::EvalResult holdout_raw;
};

CentralizedRunResult cmd_run_centralized(const config::ScenarioConfig& cfg, std::ostream& out);

struct Comparison {
  std::vector<std::optional<double>> federated_losses;
  std::vector<std::optional<double>> centralized_losses;
  double federated_mse = 0.0;
  double centralized_mse = 0.0;
  double delta = 0.0;  // federated - centralized
};

Comparison cmd_compare(const std::filesystem::path& federated_dir,
                       const std::filesystem::path& centralized_dir,
                       const std::filesystem::path& output_dir, std::ostream& out);

metrics::EvalResult cmd_evaluate(const config::ScenarioConfig& cfg,
                                 const std::filesystem::path& checkpoint,
                                 std::optional<int> postcode, std::ostream& out);

// Training clients built from prepared data; client_id is the postcode's
// index in cfg.postcodes.
std::vector<fed::ClientState> load_clients(const config::ScenarioConfig& cfg);

}  // namespace fedrep::commands
