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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emojinize::text {

/// One extended grapheme cluster (UAX #29). Only segmentation can mint one
/// from arbitrary text; `from_text` validates that its input is exactly one
/// cluster.
class GraphemeCluster {
 public:
  static GraphemeCluster from_text(std::string text);

  [[nodiscard]] const std::string& text() const noexcept { return text_; }

  friend bool operator==(const GraphemeCluster&, const GraphemeCluster&) = default;

 private:
  explicit GraphemeCluster(std::string text) : text_(std::move(text)) {}
  friend std::vector<GraphemeCluster> segment_graphemes(std::string_view text);

  std::string text_;
};

/// Splits `text` into extended grapheme clusters. Concatenating the result
/// reproduces the input byte for byte.
std::vector<GraphemeCluster> segment_graphemes(std::string_view text);

/// Cluster boundaries over code points, as indices into `cps`. Always
/// starts with 0 and ends with cps.size() (a single 0 for empty input).
std::vector<std::size_t> grapheme_boundaries(std::span<const char32_t> cps);

/// UTS #51 emoji predicate; see README for the exact acceptance rules.
bool is_emoji_cluster(const GraphemeCluster& cluster);
bool is_emoji_cluster(std::string_view cluster_text);

/// A non-empty sequence of emoji clusters, e.g. a validated translation.
class EmojiSequence {
 public:
  /// Strips ASCII spaces between clusters. Throws Error(EmptySequence) when
  /// nothing remains and Error(NonEmojiContent) on any other cluster that is
  /// not an emoji.
  static EmojiSequence parse(std::string_view text);

  [[nodiscard]] const std::vector<GraphemeCluster>& clusters() const noexcept { return clusters_; }
  [[nodiscard]] const std::string& raw() const noexcept { return raw_; }
  [[nodiscard]] std::size_t size() const noexcept { return clusters_.size(); }

  /// Clusters concatenated without separators.
  [[nodiscard]] std::string text() const;

  /// Equality compares clusters only; two replies differing in spacing are
  /// the same translation.
  friend bool operator==(const EmojiSequence& a, const EmojiSequence& b) {
    return a.clusters_ == b.clusters_;
  }

 private:
  EmojiSequence(std::vector<GraphemeCluster> clusters, std::string raw)
      : clusters_(std::move(clusters)), raw_(std::move(raw)) {}

  std::vector<GraphemeCluster> clusters_;
  std::string raw_;
};

inline EmojiSequence parse_emoji_sequence(std::string_view text) { return EmojiSequence::parse(text); }

inline std::size_t emoji_count(const EmojiSequence& seq) { return seq.size(); }

struct EmojiEntry {
  std::string emoji;
  std::string name;
};

/// Every fully-qualified (RGI) emoji in the vendored emoji-test.txt, in file
/// (CLDR) order, with its CLDR short name.
const std::vector<EmojiEntry>& rgi_emoji();

/// Version string of the vendored Unicode data, e.g. "15.1.0".
std::string_view unicode_version();

}  // namespace emojinize::text
