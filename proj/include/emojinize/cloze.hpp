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

#include <array>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emojinize/emoji_text.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/span.hpp"

namespace emojinize::eval {

enum class Condition { baseline, human_translation, emojinize, emojinize_multishot, emojinize_batch, emojinize_mwe };

std::string_view to_string(Condition c) noexcept;
/// Throws Error(InvalidArgument) for unknown names.
Condition parse_condition(std::string_view name);
const std::array<Condition, 6>& all_conditions() noexcept;

enum class ParticipantKind { human, llm };
std::string_view to_string(ParticipantKind k) noexcept;
ParticipantKind parse_participant_kind(std::string_view name);

enum class ScoredBy { exact, llm };
std::string_view to_string(ScoredBy s) noexcept;
ScoredBy parse_scored_by(std::string_view name);

inline constexpr std::string_view kBlank = "____";

struct ClozeItem {
  std::string sample_id;
  std::string text;
  Span hidden;
  std::string hidden_surface;
  Condition condition = Condition::baseline;
  std::optional<text::EmojiSequence> hint;

  /// Throws Error(InvalidArgument) if the span is out of range, does not
  /// match hidden_surface, or the hint does not agree with the condition.
  void validate() const;
};

/// The passage with the hidden span replaced by one blank per hidden word,
/// followed by " (hint: ...)" when a hint is present.
std::string render_cloze(const ClozeItem& item);

// --- LLM participant ------------------------------------------------------

struct GuesserConfig {
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_tokens = 32;
};

/// Few-shot prompt asking for a plain-text guess. Demonstrations that
/// mention the hidden word are left out so the prompt cannot leak it.
llm::ChatRequest build_guess_request(const ClozeItem& item, const GuesserConfig& config, int sample_index = 0);

/// Trimmed first line of the reply; empty means a blank guess.
std::string parse_guess(std::string_view reply);

std::string llm_guess(const ClozeItem& item, int sample_index, const GuesserConfig& config, llm::Gateway& gateway);

// --- Synonym matching -----------------------------------------------------

struct MatcherConfig {
  std::string model = "gpt-4";
  int max_resamples = 5;
};

struct MatchOutcome {
  bool matched = false;
  ScoredBy scored_by = ScoredBy::exact;
  // Set when no parseable verdict was obtained within the resample budget.
  bool flagged = false;
  // Gateway failure while asking for a verdict.
  std::exception_ptr error;
};

/// Case-insensitive comparison after trimming whitespace.
bool exact_match(std::string_view guess, std::string_view hidden);

llm::ChatRequest build_match_request(std::string_view guess, std::string_view hidden, const MatcherConfig& config,
                                     int sample_index = 0);

/// "yes"/"no" verdicts; nullopt when the reply is neither.
std::optional<bool> parse_verdict(std::string_view reply);

MatchOutcome match_guess(std::string_view guess, std::string_view hidden, const MatcherConfig& config,
                         llm::Gateway& gateway);

/// Batched form of match_guess; resampling rounds go through complete_many.
/// Gateway failures are reported per pair in MatchOutcome::error.
std::vector<MatchOutcome> match_many(std::span<const std::pair<std::string, std::string>> guess_hidden_pairs,
                                     const MatcherConfig& config, llm::Gateway& gateway);

}  // namespace emojinize::eval
