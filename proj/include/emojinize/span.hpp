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

#include <json.hpp>

namespace emojinize {

/// Half-open range of code point offsets into a text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t length() const noexcept { return end - start; }
  [[nodiscard]] bool overlaps(const Span& o) const noexcept { return start < o.end && o.start < end; }
  [[nodiscard]] bool contains(const Span& o) const noexcept { return start <= o.start && o.end <= end; }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

inline void to_json(nlohmann::json& j, const Span& s) { j = nlohmann::json{{"start", s.start}, {"end", s.end}}; }
inline void from_json(const nlohmann::json& j, Span& s) {
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
}

}  // namespace emojinize
