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

// Seeded stand-in for the smart-meter dataset: each postcode gets its own
// daily/weekly load shape (sum of sinusoids) and each customer scales it and
// adds multiplicative Gaussian noise. Not real data; used so every pipeline
// stage can run without the external download.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedrep/data_pipeline.hpp"

namespace fedrep::synthetic {

struct SyntheticSpec {
  std::vector<int> postcodes;
  std::size_t days = 28;
  std::size_t customers_per_postcode = 5;
  double noise = 0.05;
  std::uint64_t seed = 0;
  Timestamp start = make_timestamp(2012, 7, 1);
  // Adds one controlled-load (non-GC) customer per postcode.
  bool include_other_category = true;
};

std::vector<data::RawReading> generate_readings(const SyntheticSpec& spec);

}  // namespace fedrep::synthetic
