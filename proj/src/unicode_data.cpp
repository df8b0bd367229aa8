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

#include "unicode_data.hpp"

#include <algorithm>
#include <charconv>
#include <utility>

#include "emojinize/error.hpp"
#include "emojinize/utf8.hpp"
#include "resources.hpp"

namespace emojinize::text::detail {
namespace {

constexpr std::size_t kCodeSpace = 0x110000;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

char32_t parse_hex(std::string_view s) {
  s = trim(s);
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value >= kCodeSpace) {
    throw Error(ErrorCode::InvalidArgument, "bad code point in Unicode data: '" + std::string(s) + "'");
  }
  return static_cast<char32_t>(value);
}

// Calls fn(first, last, fields) for every data line of a UCD property file,
// where fields are the ';'-separated columns after the range.
template <class Fn>
void for_each_property_line(std::string_view file, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < file.size()) {
    std::size_t eol = file.find('\n', pos);
    if (eol == std::string_view::npos) eol = file.size();
    std::string_view line = file.substr(pos, eol - pos);
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t semi = line.find(';', start);
      fields.push_back(trim(line.substr(start, semi == std::string_view::npos ? semi : semi - start)));
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
    std::string_view range = fields.front();
    char32_t first = 0;
    char32_t last = 0;
    if (auto dots = range.find(".."); dots != std::string_view::npos) {
      first = parse_hex(range.substr(0, dots));
      last = parse_hex(range.substr(dots + 2));
    } else {
      first = last = parse_hex(range);
    }
    fields.erase(fields.begin());
    fn(first, last, fields);
  }
}

GraphemeBreak parse_grapheme_break(std::string_view name) {
  static const std::pair<std::string_view, GraphemeBreak> kNames[] = {
      {"CR", GraphemeBreak::CR},
      {"LF", GraphemeBreak::LF},
      {"Control", GraphemeBreak::Control},
      {"Extend", GraphemeBreak::Extend},
      {"ZWJ", GraphemeBreak::ZWJ},
      {"Regional_Indicator", GraphemeBreak::RegionalIndicator},
      {"Prepend", GraphemeBreak::Prepend},
      {"SpacingMark", GraphemeBreak::SpacingMark},
      {"L", GraphemeBreak::L},
      {"V", GraphemeBreak::V},
      {"T", GraphemeBreak::T},
      {"LV", GraphemeBreak::LV},
      {"LVT", GraphemeBreak::LVT},
  };
  for (const auto& [n, v] : kNames) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown Grapheme_Cluster_Break value " + std::string(name));
}

std::uint8_t parse_emoji_flag(std::string_view name) {
  if (name == "Emoji") return emoji_flag::kEmoji;
  if (name == "Emoji_Presentation") return emoji_flag::kPresentation;
  if (name == "Emoji_Modifier") return emoji_flag::kModifier;
  if (name == "Emoji_Modifier_Base") return emoji_flag::kModifierBase;
  if (name == "Emoji_Component") return emoji_flag::kComponent;
  if (name == "Extended_Pictographic") return emoji_flag::kPictographic;
  throw Error(ErrorCode::InvalidArgument, "unknown emoji property " + std::string(name));
}

}  // namespace

const UnicodeData& UnicodeData::instance() {
  static const UnicodeData data;
  return data;
}

UnicodeData::UnicodeData()
    : grapheme_(kCodeSpace, GraphemeBreak::Other),
      conjunct_(kCodeSpace, ConjunctBreak::None),
      emoji_(kCodeSpace, 0),
      allowlist_(kCodeSpace, false) {
  for_each_property_line(resources::grapheme_break_property,
                         [&](char32_t first, char32_t last, const auto& fields) {
                           const GraphemeBreak value = parse_grapheme_break(fields.at(0));
                           for (char32_t cp = first; cp <= last; ++cp) grapheme_[cp] = value;
                         });

  for_each_property_line(resources::indic_conjunct_break,
                         [&](char32_t first, char32_t last, const auto& fields) {
                           const std::string_view v = fields.at(1);
                           const ConjunctBreak value = v == "Consonant" ? ConjunctBreak::Consonant
                                                       : v == "Linker"  ? ConjunctBreak::Linker
                                                                        : ConjunctBreak::Extend;
                           for (char32_t cp = first; cp <= last; ++cp) conjunct_[cp] = value;
                         });

  for_each_property_line(resources::emoji_data, [&](char32_t first, char32_t last, const auto& fields) {
    const std::uint8_t flag = parse_emoji_flag(fields.at(0));
    for (char32_t cp = first; cp <= last; ++cp) emoji_[cp] |= flag;
  });

  for_each_property_line(resources::emoji_text_allowlist,
                         [&](char32_t first, char32_t last, const auto&) {
                           for (char32_t cp = first; cp <= last; ++cp) allowlist_[cp] = true;
                         });

  // emoji-test.txt: "<hex cps> ; <status> # <emoji> E<ver> <name>"
  std::string_view file = resources::emoji_test;
  std::size_t pos = 0;
  while (pos < file.size()) {
    std::size_t eol = file.find('\n', pos);
    if (eol == std::string_view::npos) eol = file.size();
    std::string_view line = file.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.starts_with("# Version:")) {
      version_ = std::string(trim(line.substr(10)));
      if (std::count(version_.begin(), version_.end(), '.') == 1) version_ += ".0";
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    const std::size_t semi = line.find(';');
    const std::size_t hash = line.find('#');
    if (semi == std::string_view::npos || hash == std::string_view::npos) continue;

    std::string sequence;
    std::string_view cps = trim(line.substr(0, semi));
    while (!cps.empty()) {
      std::size_t space = cps.find(' ');
      utf8::append(sequence, parse_hex(cps.substr(0, space)));
      if (space == std::string_view::npos) break;
      cps = trim(cps.substr(space + 1));
    }

    const std::string_view status = trim(line.substr(semi + 1, hash - semi - 1));
    Qualification q = Qualification::Unqualified;
    if (status == "fully-qualified") {
      q = Qualification::FullyQualified;
    } else if (status == "minimally-qualified") {
      q = Qualification::MinimallyQualified;
    } else if (status == "component") {
      q = Qualification::Component;
    }
    listed_.emplace(sequence, q);

    if (q == Qualification::FullyQualified) {
      // comment: "<emoji> E<major>.<minor> <name>"
      std::string_view comment = trim(line.substr(hash + 1));
      std::size_t version_at = comment.find(" E");
      std::string_view name;
      if (version_at != std::string_view::npos) {
        std::size_t name_at = comment.find(' ', version_at + 2);
        if (name_at != std::string_view::npos) name = trim(comment.substr(name_at + 1));
      }
      rgi_.push_back(EmojiEntry{sequence, std::string(name)});
    }
  }
  if (version_.empty()) version_ = "unknown";
}

GraphemeBreak UnicodeData::grapheme_break(char32_t cp) const {
  return cp < kCodeSpace ? grapheme_[cp] : GraphemeBreak::Control;
}

ConjunctBreak UnicodeData::conjunct_break(char32_t cp) const {
  return cp < kCodeSpace ? conjunct_[cp] : ConjunctBreak::None;
}

std::uint8_t UnicodeData::emoji_flags(char32_t cp) const { return cp < kCodeSpace ? emoji_[cp] : 0; }

bool UnicodeData::allowlisted(char32_t cp) const { return cp < kCodeSpace && allowlist_[cp]; }

const Qualification* UnicodeData::listed(const std::string& sequence) const {
  auto it = listed_.find(sequence);
  return it == listed_.end() ? nullptr : &it->second;
}

}  // namespace emojinize::text::detail
