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

#include "fedrep/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace fedrep {

namespace {

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t width,
                 int& out) {
  if (pos + width > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + width;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour,
                         int minute) {
  using namespace std::chrono;
  const sys_days days{std::chrono::year{year} / std::chrono::month{month} /
                      std::chrono::day{day}};
  const auto count = days.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(count) * 1440 + hour * 60 + minute};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  if (text.size() != 16 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':') {
    return std::nullopt;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, mo) ||
      !parse_fixed(text, 8, 2, d) || !parse_fixed(text, 11, 2, h) ||
      !parse_fixed(text, 14, 2, mi)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{
      std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
      std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d),
                        h, mi);
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  std::int64_t days = t.minutes / 1440;
  std::int64_t rem = t.minutes % 1440;
  if (rem < 0) {
    rem += 1440;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace fedrep
