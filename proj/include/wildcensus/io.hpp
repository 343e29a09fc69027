// Copyright 2026 The wildcensus Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace wildcensus {

std::string read_file(const std::string& path);

/// Writes `content`, creating parent directories as needed.
void write_file(const std::string& path, std::string_view content);

/// Parses a whole-file JSON document; syntax errors become ValidationError.
nlohmann::json read_json_file(const std::string& path);

/// Pretty-printed (2-space) JSON plus a trailing newline.
void write_json_file(const std::string& path, const nlohmann::ordered_json& doc);

/// Calls `fn(record, line_no)` for each non-blank line of a JSON-lines
/// file. Parse failures throw ValidationError carrying the line number.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

/// Same, reading from an in-memory buffer.
void for_each_jsonl_text(std::string_view text,
                         const std::function<void(const nlohmann::json&, std::size_t)>& fn);

/// Shortest decimal text that parses back to `v` exactly.
std::string format_number(double v);

/// Joins `dir` and `name` with a single separator.
std::string join_path(const std::string& dir, const std::string& name);

}  // namespace wildcensus
