/*
 * Copyright 2026 The Gridweave Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridweave/common.hpp"

#include <charconv>
#include <cmath>

namespace gridweave {

std::optional<TimeUs> parse_duration(std::string_view text) {
  if (text.empty()) {
    return std::nullopt;
  }
  std::int64_t number = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), number);
  if (ec != std::errc{} || number < 0) {
    return std::nullopt;
  }
  std::string_view unit(ptr, text.data() + text.size() - ptr);
  std::int64_t scale = 0;
  if (unit.empty() || unit == "us") {
    scale = 1;
  } else if (unit == "ms") {
    scale = 1'000;
  } else if (unit == "s") {
    scale = kMicrosPerSecond;
  } else if (unit == "min") {
    scale = 60 * kMicrosPerSecond;
  } else if (unit == "h") {
    scale = 3600 * kMicrosPerSecond;
  } else {
    return std::nullopt;
  }
  if (number > std::numeric_limits<TimeUs>::max() / scale) {
    return std::nullopt;
  }
  return number * scale;
}

}  // namespace gridweave
