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

#include "fedrep/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fedrep/error.hpp"
#include "fedrep/random.hpp"

namespace fedrep::synthetic {

namespace {

struct Shape {
  double daily_amp;
  double daily_phase;
  double evening_amp;
  double evening_phase;
  double weekly_amp;
  double weekly_phase;
};

Shape postcode_shape(std::uint64_t seed, int postcode) {
  std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(postcode)}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return Shape{0.3 + 0.4 * u(rng), two_pi * u(rng), 0.1 + 0.2 * u(rng),
               two_pi * u(rng),    0.05 + 0.15 * u(rng), two_pi * u(rng)};
}

double shape_at(const Shape& s, std::size_t slot) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double day = static_cast<double>(slot) / 48.0;
  return 1.0 + s.daily_amp * std::sin(two_pi * day + s.daily_phase) +
         s.evening_amp * std::sin(2.0 * two_pi * day + s.evening_phase) +
         s.weekly_amp * std::sin(two_pi * day / 7.0 + s.weekly_phase);
}

}  // namespace

std::vector<data::RawReading> generate_readings(const SyntheticSpec& spec) {
  if (spec.postcodes.empty()) throw Error("synthetic data needs at least one postcode");
  if (spec.days == 0 || spec.customers_per_postcode == 0) {
    throw Error("synthetic data needs positive days and customers_per_postcode");
  }
  const std::size_t slots = spec.days * 48;
  std::vector<data::RawReading> out;
  out.reserve(spec.postcodes.size() * (spec.customers_per_postcode + 1) * slots);
  for (int pc : spec.postcodes) {
    const auto shape = postcode_shape(spec.seed, pc);
    const std::size_t customers = spec.customers_per_postcode + (spec.include_other_category ? 1 : 0);
    for (std::size_t c = 0; c < customers; ++c) {
      const bool gc = c < spec.customers_per_postcode;
      std::mt19937_64 rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(pc), c + 1}));
      std::uniform_real_distribution<double> base_dist(0.2, 0.8);
      std::normal_distribution<double> noise(0.0, spec.noise);
      const double base = base_dist(rng);
      const std::string id = std::to_string(pc) + "-" + std::to_string(c);
      for (std::size_t t = 0; t < slots; ++t) {
        data::RawReading r;
        r.customer_id = id;
        r.category = gc ? data::Category::kGeneralConsumption : data::Category::kOther;
        r.postcode = pc;
        r.timestamp = Timestamp{spec.start.minutes + static_cast<std::int64_t>(t) * kHalfHourMinutes};
        // Rounded to Wh like real meter exports.
        const double v = std::max(0.0, base * shape_at(shape, t) * (1.0 + noise(rng)));
        r.consumption_kwh = std::round(v * 1000.0) / 1000.0;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace fedrep::synthetic
