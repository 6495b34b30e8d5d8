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

#include "gridweave/units.hpp"

#include <array>

namespace gridweave {

namespace {

struct Conversion {
  std::string_view from;
  std::string_view to;
  double factor;
};

constexpr std::array<Conversion, 3> kTable{{
    {"kW", "W", 1e3},
    {"MW", "W", 1e6},
    {"kvar", "var", 1e3},
}};

}  // namespace

std::optional<double> unit_factor(std::string_view from, std::string_view to) {
  if (from == to) {
    return 1.0;
  }
  for (const auto& entry : kTable) {
    if (entry.from == from && entry.to == to) {
      return entry.factor;
    }
    if (entry.to == from && entry.from == to) {
      return 1.0 / entry.factor;
    }
  }
  return std::nullopt;
}

}  // namespace gridweave
