// Copyright (c) 2026 The multiscore Authors. All Rights Reserved.
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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace multiscore::io {

/// One non-empty line of a comma-separated table with its 1-based number.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Splits LF-terminated comma-separated text into rows. A trailing CR is
/// stripped; blank lines are skipped. No quoting is supported.
std::vector<CsvRow> read_csv(std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Strict double parse of a whole token. Throws ParseError.
double parse_double(std::string_view token, std::size_t line);

/// Strict non-negative integer parse. Throws ParseError.
long long parse_int(std::string_view token, std::size_t line);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace multiscore::io
