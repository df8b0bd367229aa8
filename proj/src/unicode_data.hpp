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

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emojinize/emoji_text.hpp"

namespace emojinize::text::detail {

enum class GraphemeBreak : std::uint8_t {
  Other,
  CR,
  LF,
  Control,
  Extend,
  ZWJ,
  RegionalIndicator,
  Prepend,
  SpacingMark,
  L,
  V,
  T,
  LV,
  LVT,
};

enum class ConjunctBreak : std::uint8_t { None, Consonant, Extend, Linker };

namespace emoji_flag {
inline constexpr std::uint8_t kEmoji = 1;
inline constexpr std::uint8_t kPresentation = 2;
inline constexpr std::uint8_t kModifier = 4;
inline constexpr std::uint8_t kModifierBase = 8;
inline constexpr std::uint8_t kComponent = 16;
inline constexpr std::uint8_t kPictographic = 32;
}  // namespace emoji_flag

enum class Qualification : std::uint8_t { FullyQualified, MinimallyQualified, Unqualified, Component };

/// Tables parsed once from the embedded UCD files.
class UnicodeData {
 public:
  static const UnicodeData& instance();

  [[nodiscard]] GraphemeBreak grapheme_break(char32_t cp) const;
  [[nodiscard]] ConjunctBreak conjunct_break(char32_t cp) const;
  [[nodiscard]] std::uint8_t emoji_flags(char32_t cp) const;
  [[nodiscard]] bool allowlisted(char32_t cp) const;

  /// Status of `sequence` in emoji-test.txt, or nullptr when unlisted.
  [[nodiscard]] const Qualification* listed(const std::string& sequence) const;

  [[nodiscard]] const std::vector<EmojiEntry>& rgi() const { return rgi_; }
  [[nodiscard]] const std::string& version() const { return version_; }

 private:
  UnicodeData();

  // Flat per-code-point tables, 0x110000 entries each.
  std::vector<GraphemeBreak> grapheme_;
  std::vector<ConjunctBreak> conjunct_;
  std::vector<std::uint8_t> emoji_;
  std::vector<bool> allowlist_;
  std::unordered_map<std::string, Qualification> listed_;
  std::vector<EmojiEntry> rgi_;
  std::string version_;
};

}  // namespace emojinize::text::detail
