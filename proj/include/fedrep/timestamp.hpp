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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fedrep {

// Naive local wall-clock instant with minute resolution, counted from
// 1970-01-01T00:00. No time-zone or DST handling.
struct Timestamp {
  std::int64_t minutes = 0;

  auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::int64_t kHalfHourMinutes = 30;

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0,
                         int minute = 0);

// Parses `YYYY-MM-DDTHH:MM`; nullopt on any deviation from that form.
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_timestamp(Timestamp t);

inline bool is_half_hour_aligned(Timestamp t) {
  return t.minutes % kHalfHourMinutes == 0;
}

}  // namespace fedrep
