// Copyright 2026 The Emojinize Authors
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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. Offsets exposed by the rest of the library are
// code point indices; these functions translate between the two views.
namespace emojinize::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
  std::vector<char32_t> code_points;
  // byte_offsets[i] is where code_points[i] starts; the final entry is the
  // input size, so byte_offsets.size() == code_points.size() + 1.
  std::vector<std::size_t> byte_offsets;
};

/// Malformed bytes decode to U+FFFD one byte at a time, so every input byte
/// belongs to exactly one code point.
Decoded decode(std::string_view text);

void append(std::string& out, char32_t cp);
std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

std::size_t length(std::string_view text);

/// Byte offset of code point `index`; `index == length(text)` is allowed.
std::size_t byte_offset(std::string_view text, std::size_t index);

/// Code points [start, end) of `text`.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

bool is_valid(std::string_view text);

}  // namespace emojinize::utf8
