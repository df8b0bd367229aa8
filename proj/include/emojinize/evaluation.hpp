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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emojinize/cloze.hpp"
#include "emojinize/corpus.hpp"
#include "emojinize/emoji_text.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/span.hpp"
#include "emojinize/stats.hpp"

namespace emojinize::eval {

// --- Records --------------------------------------------------------------

struct RecordError {
  std::string code;
  std::string message;
};

/// One guess for one item under one condition. `matched` and `scored_by`
/// stay empty until the guess is scored; errored records carry `error`
/// instead of a guess.
struct GuessRecord {
  std::string item_id;
  Condition condition = Condition::baseline;
  ParticipantKind participant_kind = ParticipantKind::llm;
  std::string participant_id;
  std::string guess;
  bool blank = false;
  std::optional<bool> matched;
  std::optional<ScoredBy> scored_by;
  bool flagged = false;
  std::optional<RecordError> error;

  [[nodiscard]] bool scored() const noexcept { return matched.has_value(); }
  [[nodiscard]] bool errored() const noexcept { return error.has_value(); }

  /// Throws Error(InvalidArgument) when the fields contradict each other.
  void validate() const;
};

nlohmann::ordered_json to_json(const GuessRecord& record);
GuessRecord guess_record_from_json(const nlohmann::json& j);

/// Line-delimited records. A torn final line (interrupted append) is
/// ignored; any other bad line throws Error(IoError) naming the line.
std::vector<GuessRecord> parse_records(std::string_view jsonl);
/// Missing file reads as no records.
std::vector<GuessRecord> read_records(const std::filesystem::path& path);
std::string serialize_records(std::span<const GuessRecord> records);
void append_records(const std::filesystem::path& path, std::span<const GuessRecord> records);

/// Keeps the last record per (item, condition, participant kind, participant
/// id), in order of first appearance. Later lines supersede earlier ones.
std::vector<GuessRecord> latest_records(std::span<const GuessRecord> records);

// --- Hints ------------------------------------------------------------------

/// What a condition shows for one sample: the emoji and the span they stand
/// for, which is the hidden span of the cloze item.
struct Hint {
  text::EmojiSequence emoji;
  Span hidden;
  std::string hidden_surface;
};

using HintMap = std::map<std::string, Hint, std::less<>>;

/// Human-translation import: one {"sample_id", "emoji"} object per line.
/// Emoji are validated with parse_emoji_sequence; the first record for a
/// sample wins. Unknown sample ids and invalid emoji throw with the line
/// number, keeping the error code of the underlying failure.
HintMap parse_human_translations(std::string_view jsonl, const corpus::CorpusFile& corpus);
HintMap load_human_translations(const std::filesystem::path& path, const corpus::CorpusFile& corpus);

/// Cloze item for a corpus entry. Baseline hides the target word; the other
/// conditions hide the hint's span. Throws Error(MissingTranslation) when a
/// non-baseline condition has no hint.
ClozeItem make_cloze_item(const corpus::CorpusEntry& entry, Condition condition, const Hint* hint);

// --- Running a condition ----------------------------------------------------

struct RunOptions {
  GuesserConfig guesser;
  MatcherConfig matcher;
  // Records file to resume from and append to; empty keeps records in memory.
  std::filesystem::path records_path;
  // Items per complete_many batch; each batch is persisted before the next.
  std::size_t chunk_size = 64;
};

struct RunSummary {
  std::size_t reused = 0;
  std::size_t scored = 0;
  std::size_t errored = 0;
};

/// One LLM guess per corpus entry, scored with match_many. Items that already
/// have an error-free record for this condition and participant in
/// `records_path` are skipped; errored ones are retried. Per-item failures
/// become errored records. Returns the current record of every entry in
/// corpus order.
std::vector<GuessRecord> run_condition(const corpus::CorpusFile& corpus, Condition condition, const HintMap* hints,
                                       const RunOptions& options, llm::Gateway& gateway,
                                       RunSummary* summary = nullptr);

/// Hidden text for a record, or nullopt if the item is unknown.
using HiddenLookup = std::function<std::optional<std::string>(const GuessRecord&)>;

/// Scores every unscored, error-free record in place (used for human
/// guesses collected by the study service). Records whose item is unknown
/// are marked errored.
void score_records(std::span<GuessRecord> records, const HiddenLookup& hidden, const MatcherConfig& matcher,
                   llm::Gateway& gateway);

// --- Report -----------------------------------------------------------------

struct ConditionAccuracy {
  Condition condition = Condition::baseline;
  ParticipantKind participant_kind = ParticipantKind::llm;
  AccuracyStat stat;
  std::size_t errored = 0;
  std::size_t flagged = 0;
};

struct CorrelationResult {
  Condition condition = Condition::baseline;
  std::size_t pairs = 0;
  std::optional<double> phi;
  // Why phi is missing.
  std::string reason;
};

struct Report {
  // Sorted by condition, then participant kind.
  std::vector<ConditionAccuracy> accuracy;
  // Conditions by descending LLM accuracy.
  std::vector<Condition> ordering;
  std::map<std::string, EmojiUsageStats> emoji_usage;
  std::map<std::string, LengthStat> length;
  std::vector<CorrelationResult> correlation;
};

struct ReportInputs {
  std::vector<GuessRecord> records;
  // Translation source name (e.g. "human_translation") to its translations.
  std::map<std::string, std::vector<text::EmojiSequence>> translations;
  BootstrapOptions bootstrap;
};

/// Uses the latest scored records; errored ones are counted, not scored.
Report build_report(const ReportInputs& inputs);

nlohmann::ordered_json report_to_json(const Report& report);

/// Per-item outcomes, sorted by item id, condition, participant kind and id.
std::string records_csv(std::span<const GuessRecord> records);

/// Plot-ready accuracy series: one row per condition and participant kind.
std::string accuracy_series_csv(const Report& report);

}  // namespace emojinize::eval
