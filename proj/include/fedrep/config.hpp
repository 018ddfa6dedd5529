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

// Scenario configuration: one JSON document per scenario. Every key is
// optional except `postcodes` and `holdout_postcode`; missing keys take the
// defaults below. Dotted paths (`dp.enabled`, `train.learning_rate`, ...)
// address nested keys, both in the file and in command-line overrides.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedrep/data_pipeline.hpp"
#include "fedrep/fed_core.hpp"
#include "fedrep/metrics.hpp"

namespace fedrep::config {

struct SyntheticOptions {
  std::size_t days = 28;
  std::size_t customers_per_postcode = 5;
  double noise = 0.05;

  bool operator==(const SyntheticOptions&) const = default;
};

struct ScenarioConfig {
  std::string scenario_id = "custom";
  std::filesystem::path dataset_path;
  data::CsvLayout dataset_layout = data::CsvLayout::kLong;
  bool forward_fill = false;
  std::vector<int> postcodes;
  int holdout_postcode = 0;
  std::filesystem::path output_dir = "fedrep_out";
  std::uint64_t master_seed = 42;
  std::size_t repetitions = 5;

  double train_fraction = data::kDefaultTrainFraction;
  std::size_t lookback = data::kDefaultLookback;
  std::size_t lookahead = data::kDefaultLookahead;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;

  fed::RoundConfig round;
  std::size_t centralized_epochs = 30;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  metrics::ScaleMode eval_scale = metrics::ScaleMode::kScaled;
  SyntheticOptions synthetic;

  lstm::ModelDims dims() const { return {1, hidden1, hidden2, lookahead}; }
  void validate() const;
};

ScenarioConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

// Applies `dotted.key=value`; value is parsed as JSON and falls back to a
// plain string.
void apply_override(nlohmann::json& j, std::string_view assignment);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string canonical(const ScenarioConfig& c);

privacy::Key parse_key_hex(std::string_view hex);

}  // namespace fedrep::config
