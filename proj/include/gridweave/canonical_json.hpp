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

#include <string>

#include <json.hpp>

namespace gridweave {

using Json = nlohmann::ordered_json;

/// Serializes `value` with no whitespace, object keys in insertion order and
/// floating-point numbers in shortest round-trip form (std::to_chars).
/// Non-finite floats are rendered as null.
std::string canonical_dump(const Json& value);

/// Appends the shortest round-trip rendering of `value` to `out`.
void append_real(std::string& out, double value);

/// Appends `text` as a JSON string literal (quoted and escaped).
void append_string(std::string& out, const std::string& text);

}  // namespace gridweave
