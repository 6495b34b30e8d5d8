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

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridweave {

/// Simulated time in integer microseconds.
using TimeUs = std::int64_t;

/// Sentinel for "no bound" in lower-bound computations.
inline constexpr TimeUs kTimeInfinity = std::numeric_limits<TimeUs>::max();

inline constexpr TimeUs kMicrosPerSecond = 1'000'000;

/// Base for every error raised by the library. `code()` is the stable,
/// machine-readable name (e.g. "SchemaError", "NoAdapter").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Parses a duration such as "60s", "1500ms", "2h", "90min" or a bare
/// integer (microseconds). Returns nullopt on malformed input.
std::optional<TimeUs> parse_duration(std::string_view text);

}  // namespace gridweave
