// Copyright 2026 The recipgrad Authors
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

#include <string>
#include <utility>
#include <vector>

namespace rg {

std::string trim(const std::string& s);
std::string lower(std::string s);
std::vector<std::string> split(const std::string& s, char sep);

// Strict numeric parsing: the whole (trimmed) string must be consumed.
int parse_int(const std::string& s);
double parse_real(const std::string& s);
// Shortest decimal that round-trips.
std::string format_real(double v);

// `key = value` lines; '#' starts a comment. Order is preserved.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

std::string read_file(const std::string& path);

}  // namespace rg
