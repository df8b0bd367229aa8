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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "emojinize/corpus_text.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/span.hpp"

namespace emojinize::corpus {

enum class SourceKind { news, ebook };
std::string_view to_string(SourceKind k) noexcept;
SourceKind parse_source_kind(std::string_view name);

struct RawDocument {
  SourceKind source_kind = SourceKind::news;
  std::string origin;
  std::vector<std::string> blocks;
};

/// Reads an HTML (news) or plain-text (ebook) file. `origin` is recorded
/// as given.
RawDocument load_document(const std::filesystem::path& file, SourceKind kind, std::string origin);

// --- Lexicons ---------------------------------------------------------------

enum class WordClass { noun, verb, adjective, adverb, proper_noun, other };
std::string_view to_string(WordClass c) noexcept;
WordClass parse_word_class(std::string_view name);
bool is_content_class(WordClass c) noexcept;

using WordSet = std::unordered_set<std::string>;

/// One lowercase entry per line; blank lines and '#' comments ignored.
WordSet parse_word_list(std::string_view text);
WordSet load_word_list(const std::filesystem::path& path);
const WordSet& bundled_stopwords();
const WordSet& bundled_profanity();

using PosLexicon = std::unordered_map<std::string, WordClass>;
/// "word<TAB>class" lines.
PosLexicon parse_pos_lexicon(std::string_view text);
const PosLexicon& bundled_pos_lexicon();

/// Candidate base forms of a word, the lowercased word first, by stripping
/// plural, tense, and comparative endings.
std::vector<std::string> lemma_candidates(std::string_view word);

// --- Filters ---------------------------------------------------------------

struct FilterVerdict {
  bool pass = true;
  // Matched lemma or failing category when !pass.
  std::string reason;

  static FilterVerdict ok() { return {true, {}}; }
  static FilterVerdict fail(std::string why) { return {false, std::move(why)}; }
};

/// Fails with the matched lemma when any token lemmatizes into `lexicon`;
/// empty text fails with reason "empty".
FilterVerdict profanity_filter(std::string_view text, const WordSet& lexicon);

struct QualityFilterConfig {
  std::string model = "gpt-4";
  int max_resamples = 5;
};

inline constexpr std::array<std::string_view, 4> kQualityCategories{"spam", "non_english", "formatting",
                                                                    "violent_or_sexual"};

llm::ChatRequest build_quality_request(std::string_view text, const QualityFilterConfig& config, int sample_index = 0);

/// Verdict from a {"spam":bool,...} reply; nullopt when any category is
/// missing or not boolean. The first flagged category is the reason.
std::optional<FilterVerdict> parse_quality_reply(std::string_view reply);

/// Categories judged by the LLM. A text with no parseable verdict within the
/// resample budget fails with reason "unverifiable".
FilterVerdict llm_quality_filter(std::string_view text, const QualityFilterConfig& config, llm::Gateway& gateway);
std::vector<FilterVerdict> llm_quality_filter_many(std::span<const std::string> texts,
                                                   const QualityFilterConfig& config, llm::Gateway& gateway);

// --- Word classes ----------------------------------------------------------

class Tagger {
 public:
  virtual ~Tagger() = default;
  /// One class per token; punctuation and numbers are WordClass::other.
  virtual std::vector<WordClass> tag(std::string_view text, std::span<const Token> tokens) = 0;
  /// Recorded in corpus manifests.
  [[nodiscard]] virtual std::string version() const = 0;
};

/// Lexicon lookup with lemma fallback, capitalization, and suffix rules.
class LexiconTagger final : public Tagger {
 public:
  LexiconTagger() : LexiconTagger(bundled_pos_lexicon()) {}
  explicit LexiconTagger(PosLexicon lexicon);

  std::vector<WordClass> tag(std::string_view text, std::span<const Token> tokens) override;
  [[nodiscard]] std::string version() const override;

  [[nodiscard]] WordClass classify(const Token& token) const;

 private:
  PosLexicon lexicon_;
  std::string digest_;
};

/// Asks the model to label the word tokens with a JSON list of classes.
class LlmTagger final : public Tagger {
 public:
  LlmTagger(llm::Gateway& gateway, std::string model, int max_resamples = 5);

  std::vector<WordClass> tag(std::string_view text, std::span<const Token> tokens) override;
  [[nodiscard]] std::string version() const override { return "llm:" + model_; }

  [[nodiscard]] llm::ChatRequest build_request(std::span<const Token> tokens, int sample_index) const;

 private:
  llm::Gateway& gateway_;
  std::string model_;
  int max_resamples_;
};

// --- Samples and targets ---------------------------------------------------

struct TextSample {
  std::string id;
  std::string text;
  SourceKind source_kind = SourceKind::news;
  std::string origin;
};

/// "<kind>-" followed by 12 hex digits of SHA-256 over origin and text.
std::string sample_id(SourceKind kind, std::string_view origin, std::string_view text);

struct TargetSelection {
  std::string sample_id;
  Span span;
  std::string surface;
  WordClass word_class = WordClass::noun;
};

/// Content-class words that are neither stopwords nor contractions and occur
/// only once in the passage (case-insensitively), in text order.
std::vector<TargetSelection> eligible_targets(const TextSample& sample, Tagger& tagger, const WordSet& stopwords);

/// Picks one eligible token uniformly with a generator seeded by `seed`.
/// Throws Error(NoEligibleToken).
TargetSelection select_target_word(const TextSample& sample, std::uint64_t seed, Tagger& tagger,
                                   const WordSet& stopwords);

// --- Corpus files ----------------------------------------------------------

struct CorpusEntry {
  TextSample sample;
  TargetSelection target;
};

struct CorpusManifest {
  std::map<std::string, std::size_t> counts;
  std::uint64_t seed = 0;
  nlohmann::json settings = nlohmann::json::object();
};

struct CorpusFile {
  CorpusManifest manifest;
  std::vector<CorpusEntry> entries;

  [[nodiscard]] const CorpusEntry* find(std::string_view id) const;
};

/// Manifest header line, then one record per entry.
std::string serialize_corpus(const CorpusFile& corpus);
CorpusFile parse_corpus(std::string_view jsonl);
void write_corpus(const std::filesystem::path& path, const CorpusFile& corpus);
CorpusFile read_corpus(const std::filesystem::path& path);

struct SourceConfig {
  SourceKind kind = SourceKind::news;
  std::filesystem::path directory;
  std::size_t count = 0;
};

struct CorpusConfig {
  std::vector<SourceConfig> sources;
  std::uint64_t seed = 7;
  PassageBounds bounds;
  WordSet stopwords = bundled_stopwords();
  WordSet profanity = bundled_profanity();
  // The LLM quality filter is skipped when unset.
  std::optional<QualityFilterConfig> quality;
};

/// Samples passages per source in seeded order, filters them, picks target
/// words, and shuffles the result. Throws Error(InsufficientCleanSamples)
/// when a source runs out before its quota.
CorpusFile build_corpus(const CorpusConfig& config, Tagger& tagger, llm::Gateway* gateway);

}  // namespace emojinize::corpus
