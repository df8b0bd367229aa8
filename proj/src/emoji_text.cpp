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

#include "emojinize/emoji_text.hpp"

#include "emojinize/error.hpp"
#include "emojinize/utf8.hpp"
#include "unicode_data.hpp"

namespace emojinize::text {

using detail::ConjunctBreak;
using detail::GraphemeBreak;
using detail::UnicodeData;
namespace flag = detail::emoji_flag;

namespace {

constexpr char32_t kZwj = 0x200D;
constexpr char32_t kVs15 = 0xFE0E;
constexpr char32_t kVs16 = 0xFE0F;
constexpr char32_t kKeycap = 0x20E3;
constexpr char32_t kTagFirst = 0xE0020;
constexpr char32_t kTagLast = 0xE007E;
constexpr char32_t kCancelTag = 0xE007F;

bool is_control(GraphemeBreak b) {
  return b == GraphemeBreak::Control || b == GraphemeBreak::CR || b == GraphemeBreak::LF;
}

// Running context needed by the rules that look further back than one code
// point (GB9c, GB11, GB12/13).
struct BreakContext {
  enum class Pictographic { None, Seen, SeenZwj } pictographic = Pictographic::None;
  bool conjunct_open = false;   // InCB=Consonant [Extend|Linker]*
  bool conjunct_linked = false;  // ... with at least one Linker
  std::size_t regional_run = 0;  // consecutive RIs ending at the previous code point

  void advance(char32_t cp, GraphemeBreak gb, ConjunctBreak cb, bool pictographic_cp) {
    if (pictographic_cp) {
      pictographic = Pictographic::Seen;
    } else if (pictographic == Pictographic::Seen && gb == GraphemeBreak::Extend) {
      // stays Seen
    } else if (pictographic == Pictographic::Seen && gb == GraphemeBreak::ZWJ) {
      pictographic = Pictographic::SeenZwj;
    } else {
      pictographic = Pictographic::None;
    }

    if (cb == ConjunctBreak::Consonant) {
      conjunct_open = true;
      conjunct_linked = false;
    } else if (conjunct_open && cb == ConjunctBreak::Linker) {
      conjunct_linked = true;
    } else if (!(conjunct_open && cb == ConjunctBreak::Extend)) {
      conjunct_open = conjunct_linked = false;
    }

    regional_run = gb == GraphemeBreak::RegionalIndicator ? regional_run + 1 : 0;
    (void)cp;
  }
};

bool breaks_between(GraphemeBreak prev, GraphemeBreak cur, ConjunctBreak cur_cb, bool cur_pictographic,
                    const BreakContext& ctx) {
  using GB = GraphemeBreak;
  if (prev == GB::CR && cur == GB::LF) return false;                      // GB3
  if (is_control(prev) || is_control(cur)) return true;                    // GB4, GB5
  if (prev == GB::L && (cur == GB::L || cur == GB::V || cur == GB::LV || cur == GB::LVT)) return false;  // GB6
  if ((prev == GB::LV || prev == GB::V) && (cur == GB::V || cur == GB::T)) return false;  // GB7
  if ((prev == GB::LVT || prev == GB::T) && cur == GB::T) return false;   // GB8
  if (cur == GB::Extend || cur == GB::ZWJ) return false;                   // GB9
  if (cur == GB::SpacingMark) return false;                                // GB9a
  if (prev == GB::Prepend) return false;                                   // GB9b
  if (cur_cb == ConjunctBreak::Consonant && ctx.conjunct_open && ctx.conjunct_linked) return false;  // GB9c
  if (cur_pictographic && ctx.pictographic == BreakContext::Pictographic::SeenZwj) return false;  // GB11
  if (prev == GB::RegionalIndicator && cur == GB::RegionalIndicator && ctx.regional_run % 2 == 1) {
    return false;  // GB12, GB13
  }
  return true;  // GB999
}

bool has(std::uint8_t flags, std::uint8_t f) { return (flags & f) != 0; }

bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }

bool is_keycap_base(char32_t cp) { return (cp >= '0' && cp <= '9') || cp == '#' || cp == '*'; }

// Consumes one element of an emoji sequence starting at `pos`; returns the
// position after it, or npos when `cps[pos...]` is not emoji-presented.
std::size_t consume_element(const std::vector<char32_t>& cps, std::size_t pos, bool allow_flag_and_keycap) {
  constexpr auto npos = std::string::npos;
  const UnicodeData& ucd = UnicodeData::instance();
  const std::size_t n = cps.size();
  const char32_t cp = cps[pos];

  if (is_regional_indicator(cp)) {
    if (!allow_flag_and_keycap) return npos;
    return pos + 1 < n && is_regional_indicator(cps[pos + 1]) ? pos + 2 : npos;
  }
  if (is_keycap_base(cp)) {
    if (allow_flag_and_keycap && pos + 2 < n && cps[pos + 1] == kVs16 && cps[pos + 2] == kKeycap) {
      return pos + 3;
    }
    return npos;
  }

  const std::uint8_t flags = ucd.emoji_flags(cp);
  if (!has(flags, flag::kEmoji)) return npos;
  std::size_t next = pos + 1;
  if (next < n && cps[next] == kVs15) return npos;
  if (next < n && cps[next] == kVs16) {
    ++next;
  } else if (next < n && has(flags, flag::kModifierBase) && has(ucd.emoji_flags(cps[next]), flag::kModifier)) {
    ++next;
  } else if (!has(flags, flag::kPresentation) && !ucd.allowlisted(cp)) {
    return npos;
  }

  // emoji tag sequence: base tag_spec+ cancel_tag
  if (next < n && cps[next] >= kTagFirst && cps[next] <= kTagLast) {
    while (next < n && cps[next] >= kTagFirst && cps[next] <= kTagLast) ++next;
    if (next >= n || cps[next] != kCancelTag) return npos;
    ++next;
  }
  return next;
}

bool is_emoji_code_points(const std::vector<char32_t>& cps, const std::string& text) {
  if (cps.empty()) return false;
  if (const auto* q = UnicodeData::instance().listed(text)) {
    if (*q != detail::Qualification::Unqualified) return true;
  }
  std::size_t pos = consume_element(cps, 0, true);
  if (pos == std::string::npos) return false;
  bool zwj_sequence = false;
  while (pos < cps.size()) {
    if (cps[pos] != kZwj || pos + 1 >= cps.size()) return false;
    zwj_sequence = true;
    pos = consume_element(cps, pos + 1, false);
    if (pos == std::string::npos) return false;
  }
  // A flag or keycap cannot start a ZWJ sequence either.
  if (zwj_sequence && (is_regional_indicator(cps[0]) || is_keycap_base(cps[0]))) return false;
  return true;
}

}  // namespace

std::vector<std::size_t> grapheme_boundaries(std::span<const char32_t> cps) {
  const UnicodeData& ucd = UnicodeData::instance();
  std::vector<std::size_t> bounds{0};
  if (cps.empty()) return bounds;

  BreakContext ctx;
  GraphemeBreak prev = ucd.grapheme_break(cps[0]);
  ctx.advance(cps[0], prev, ucd.conjunct_break(cps[0]),
              has(ucd.emoji_flags(cps[0]), flag::kPictographic));
  for (std::size_t i = 1; i < cps.size(); ++i) {
    const GraphemeBreak cur = ucd.grapheme_break(cps[i]);
    const ConjunctBreak cb = ucd.conjunct_break(cps[i]);
    const bool pict = has(ucd.emoji_flags(cps[i]), flag::kPictographic);
    if (breaks_between(prev, cur, cb, pict, ctx)) bounds.push_back(i);
    ctx.advance(cps[i], cur, cb, pict);
    prev = cur;
  }
  bounds.push_back(cps.size());
  return bounds;
}

std::vector<GraphemeCluster> segment_graphemes(std::string_view text) {
  std::vector<GraphemeCluster> out;
  if (text.empty()) return out;
  const utf8::Decoded decoded = utf8::decode(text);
  const std::vector<std::size_t> bounds = grapheme_boundaries(decoded.code_points);
  out.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const std::size_t b = decoded.byte_offsets[bounds[i]];
    const std::size_t e = decoded.byte_offsets[bounds[i + 1]];
    out.push_back(GraphemeCluster(std::string(text.substr(b, e - b))));
  }
  return out;
}

GraphemeCluster GraphemeCluster::from_text(std::string text) {
  auto clusters = segment_graphemes(text);
  if (clusters.size() != 1) {
    throw Error(ErrorCode::InvalidArgument,
                "expected exactly one grapheme cluster, got " + std::to_string(clusters.size()));
  }
  return std::move(clusters.front());
}

bool is_emoji_cluster(const GraphemeCluster& cluster) {
  return is_emoji_code_points(utf8::decode(cluster.text()).code_points, cluster.text());
}

bool is_emoji_cluster(std::string_view cluster_text) {
  const std::string text(cluster_text);
  const auto decoded = utf8::decode(text);
  if (grapheme_boundaries(decoded.code_points).size() != 2) return false;
  return is_emoji_code_points(decoded.code_points, text);
}

EmojiSequence EmojiSequence::parse(std::string_view text) {
  std::vector<GraphemeCluster> kept;
  for (GraphemeCluster& c : segment_graphemes(text)) {
    if (c.text() == " ") continue;
    if (!is_emoji_cluster(c)) {
      throw Error(ErrorCode::NonEmojiContent, "not an emoji: '" + c.text() + "' in '" + std::string(text) + "'");
    }
    kept.push_back(std::move(c));
  }
  if (kept.empty()) throw Error(ErrorCode::EmptySequence, "no emoji in '" + std::string(text) + "'");
  return EmojiSequence(std::move(kept), std::string(text));
}

std::string EmojiSequence::text() const {
  std::string out;
  for (const auto& c : clusters_) out += c.text();
  return out;
}

const std::vector<EmojiEntry>& rgi_emoji() { return UnicodeData::instance().rgi(); }

std::string_view unicode_version() { return UnicodeData::instance().version(); }

}  // namespace emojinize::text
