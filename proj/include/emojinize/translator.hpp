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

#include <exception>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emojinize/cloze.hpp"
#include "emojinize/emoji_text.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/span.hpp"

namespace emojinize::translate {

struct MarkedText {
  std::string text;
  // Code point ranges, sorted and non-overlapping.
  std::vector<Span> spans;

  /// Throws Error(InvalidArgument) unless there is at least one span and
  /// every span is in range, covers a word, and follows the previous one.
  void validate() const;

  [[nodiscard]] std::vector<std::string> passages() const;
  /// The text with every span wrapped as <passage>.
  [[nodiscard]] std::string render() const;
  [[nodiscard]] MarkedText only(std::size_t span_index) const;
};

struct Demonstration {
  MarkedText marked;
  std::vector<text::EmojiSequence> translations;
};

/// Parses [{text, spans:[{start,end}], translations:[...]}], validating each
/// entry. Throws Error(ConfigInvalid) on malformed input.
std::vector<Demonstration> parse_demonstrations(const nlohmann::json& j);
std::vector<Demonstration> load_demonstrations(const std::filesystem::path& path);
/// The bundled set.
const std::vector<Demonstration>& default_demonstrations();

struct MultishotConfig {
  int candidates = 5;
  int guesses = 10;
  double candidate_temperature = 1.0;
  double guess_temperature = 1.0;
};

struct TranslatorConfig {
  std::string model = "gpt-4";
  // Named in the system prompt as the language of the source text.
  std::string language = "English";
  double temperature = 0.0;
  int max_resamples = 5;
  int max_tokens = 256;
  std::vector<Demonstration> demonstrations = default_demonstrations();
  MultishotConfig multishot;
  // Used by the backtranslation utility.
  eval::GuesserConfig guesser;
  eval::MatcherConfig matcher;

  void validate() const;
};

struct TranslationResult {
  std::vector<text::EmojiSequence> sequences;
  std::string raw_reply;
  int resamples_used = 0;
};

/// One translation attempt outcome in a batched call.
struct TranslationOutcome {
  std::optional<TranslationResult> result;
  std::exception_ptr error;

  [[nodiscard]] bool ok() const noexcept { return result.has_value(); }
  /// The result, or rethrows the error.
  [[nodiscard]] const TranslationResult& value() const;
};

/// System message, then a user/assistant pair per demonstration, then the
/// query. A single-span query uses string-valued replies and shows each
/// demonstration with its first span only; several spans use arrays.
std::vector<llm::ChatMessage> build_translation_prompt(const MarkedText& marked, const TranslatorConfig& config);

llm::ChatRequest build_translation_request(const MarkedText& marked, const TranslatorConfig& config,
                                           int sample_index, double temperature);

/// Throws Error(MalformedJson), Error(MissingSpan), Error(NonEmojiContent)
/// or Error(EmptySequence).
std::vector<text::EmojiSequence> parse_translation_reply(std::string_view reply,
                                                         std::span<const std::string> expected_passages);

/// One request per span, each resampled independently.
TranslationResult translate(const MarkedText& marked, const TranslatorConfig& config, llm::Gateway& gateway);

/// All spans in one request, resampled as a whole.
TranslationResult translate_batch(const MarkedText& marked, const TranslatorConfig& config, llm::Gateway& gateway);

/// Translates each input as one request (all of its spans at once) with
/// resampling rounds issued through complete_many. Failures are per item.
std::vector<TranslationOutcome> translate_many(std::span<const MarkedText> inputs, const TranslatorConfig& config,
                                               llm::Gateway& gateway);

// --- Multi-word units -----------------------------------------------------

llm::ChatRequest build_units_request(std::string_view text, const TranslatorConfig& config, int sample_index);

/// Spans for the proposed units that occur verbatim on word boundaries,
/// in proposal order, skipping any that overlap an earlier one. Throws
/// Error(MalformedJson) if the reply is not {"units":[...]}.
std::vector<Span> parse_units_reply(std::string_view reply, std::string_view text);

/// Throws Error(NoUnitsFound) when no proposed unit survives.
std::vector<Span> identify_units(std::string_view text, const TranslatorConfig& config, llm::Gateway& gateway);

struct UnitsOutcome {
  std::optional<std::vector<Span>> units;
  std::exception_ptr error;
};

/// Batched identify_units; failures are per text.
std::vector<UnitsOutcome> identify_units_many(std::span<const std::string> texts, const TranslatorConfig& config,
                                             llm::Gateway& gateway);

/// The unit containing `target`, else the first multi-word unit, else the
/// first unit.
Span choose_unit(std::string_view text, std::span<const Span> units, const Span& target);

// --- Backtranslation --------------------------------------------------------

/// Fraction of `guesses` sampled LLM guesses that the matcher accepts when
/// `candidate` is shown as the hint for `item`.
double backtranslation_utility(const text::EmojiSequence& candidate, const eval::ClozeItem& item, int guesses,
                               const TranslatorConfig& config, llm::Gateway& gateway);

struct Candidate {
  text::EmojiSequence sequence;
  std::string raw_reply;
  int sample_index = 0;
  double utility = 0.0;
};

struct MultishotResult {
  TranslationResult translation;
  double utility = 0.0;
  // Distinct accepted candidates in sampling order.
  std::vector<Candidate> candidates;
};

/// Samples candidates for the single span of `marked`, scores each by
/// backtranslation utility against `item`, and keeps the best (ties: fewer
/// emoji, then lower sample index).
MultishotResult translate_multishot(const MarkedText& marked, const eval::ClozeItem& item,
                                    const TranslatorConfig& config, llm::Gateway& gateway);

}  // namespace emojinize::translate
