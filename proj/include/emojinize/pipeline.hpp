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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emojinize/cloze.hpp"
#include "emojinize/corpus.hpp"
#include "emojinize/corpus_text.hpp"
#include "emojinize/evaluation.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/translator.hpp"

namespace emojinize::pipeline {

enum class TranslateMode { single, batch, mwe, multishot };

std::string_view to_string(TranslateMode m) noexcept;
/// Throws Error(InvalidArgument).
TranslateMode parse_translate_mode(std::string_view name);
const std::vector<TranslateMode>& all_translate_modes();

/// The condition whose hints a mode produces, and back.
eval::Condition condition_for(TranslateMode mode) noexcept;
std::optional<TranslateMode> mode_for(eval::Condition condition) noexcept;

// --- Configuration ------------------------------------------------------------

struct GatewaySettings {
  // Base URL of an OpenAI-compatible API, or "scripted:<rules.json>".
  std::string endpoint = "https://api.openai.com/v1";
  std::vector<std::string> api_keys;
  std::size_t max_in_flight = 8;
  int max_retries = 3;
  int initial_backoff_ms = 500;
  int rate_limit_cooldown_s = 30;
  int timeout_s = 120;
  // Stamp cache records with the epoch instead of the wall clock so that
  // cache files of scripted runs are reproducible.
  bool fixed_timestamps = false;
  // Resolved rules file for a scripted endpoint.
  std::filesystem::path script;
};

struct Models {
  std::string translator = "gpt-4";
  std::string guesser = "gpt-4";
  std::string matcher = "gpt-4";
  std::string quality_filter = "gpt-4";
  std::string tagger = "gpt-4";
};

struct TranslatorSettings {
  std::string language = "English";
  double temperature = 0.0;
  int max_resamples = 5;
  int max_tokens = 256;
  int candidates = 5;
  int guesses = 10;
  double candidate_temperature = 1.0;
  double guess_temperature = 1.0;
  std::optional<std::filesystem::path> demonstrations;
  // Spans per batch-mode request, the target included.
  std::size_t batch_max_spans = 5;
};

struct CorpusSettings {
  std::vector<corpus::SourceConfig> sources;
  std::uint64_t seed = 7;
  corpus::PassageBounds bounds;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> profanity;
  std::optional<std::filesystem::path> pos_lexicon;
  bool quality_filter = true;
  // "lexicon" or "llm".
  std::string tagger = "lexicon";
};

struct EvaluationSettings {
  std::vector<eval::Condition> conditions{eval::Condition::baseline, eval::Condition::human_translation,
                                          eval::Condition::emojinize};
  std::size_t bootstrap_resamples = 10000;
  std::uint64_t bootstrap_seed = 20240101;
  // Import file for the human_translation condition; defaults to the study
  // service's translation log.
  std::optional<std::filesystem::path> human_translations;
  double guess_temperature = 0.0;
  int matcher_max_resamples = 5;
  std::size_t chunk_size = 64;
};

struct StudySettings {
  std::size_t batch_size = 10;
  std::size_t max_assignments = 0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
  std::vector<eval::Condition> cloze_conditions{eval::Condition::baseline, eval::Condition::human_translation,
                                                eval::Condition::emojinize};
};

struct Paths {
  std::filesystem::path cache;
  std::filesystem::path corpus;
  std::filesystem::path translations;
  std::filesystem::path records;
  std::filesystem::path reports;
  std::filesystem::path study;
};

struct PipelineConfig {
  GatewaySettings gateway;
  Models models;
  TranslatorSettings translator;
  CorpusSettings corpus;
  EvaluationSettings evaluation;
  StudySettings study;
  Paths paths;
  // Every setting with defaults filled in, paths as written and API keys
  // left out. This is what manifests digest.
  nlohmann::ordered_json normalized;

  [[nodiscard]] std::string digest() const;
};

/// Looks up an environment variable.
using Environment = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_environment(const std::string& name);

/// Relative paths resolve against `base_dir`. EMOJINIZE_ENDPOINT and
/// EMOJINIZE_API_KEYS (comma separated) override the gateway settings.
/// Unknown keys and out-of-range values throw Error(ConfigInvalid).
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                            const Environment& env = process_environment);
PipelineConfig load_config(const std::filesystem::path& file, const Environment& env = process_environment);

// --- Stage files ----------------------------------------------------------------

/// One line of a translations file.
struct TranslationRecord {
  std::string sample_id;
  TranslateMode mode = TranslateMode::single;
  // The span the evaluation hides and its text.
  Span hidden;
  std::string hidden_surface;
  // Translation of the hidden span.
  std::string emoji;
  std::vector<Span> spans;
  std::vector<std::string> translations;
  std::string raw_reply;
  int resamples_used = 0;
  std::optional<double> utility;
  nlohmann::ordered_json candidates;
  std::optional<eval::RecordError> error;

  [[nodiscard]] bool errored() const noexcept { return error.has_value(); }
};

nlohmann::ordered_json to_json(const TranslationRecord& r);
TranslationRecord translation_record_from_json(const nlohmann::json& j);
/// Latest record per sample, in file order of first appearance. A torn
/// final line is ignored. Missing file reads as empty.
std::vector<TranslationRecord> read_translations(const std::filesystem::path& path);

/// Hints from the error-free records of a translations file. Throws
/// Error(MissingStageInput) if the file does not exist.
eval::HintMap load_model_hints(const std::filesystem::path& path, const corpus::CorpusFile& corpus);

// --- Running stages -------------------------------------------------------------

struct StageResult {
  std::string stage;
  std::vector<std::filesystem::path> outputs;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

struct PipelineOptions {
  // Answer only from the cache; any miss raises Error(CacheMiss).
  bool replay_only = false;
  // Rebuild the corpus even if one built with other settings exists.
  bool force = false;
  // Replaces the backend the endpoint setting would create.
  std::shared_ptr<llm::Backend> backend;
};

/// Runs stages over one configuration. Each stage resumes from its output
/// files and writes "<output>.manifest.json" next to each of them.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, PipelineOptions options = {});
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  StageResult build_corpus();
  StageResult translate(TranslateMode mode);
  /// Empty `conditions` means the configured ones.
  StageResult evaluate(std::span<const eval::Condition> conditions = {});
  StageResult report();
  /// Corpus, the translations the configured conditions need, evaluation and
  /// report.
  std::vector<StageResult> run_all();

  /// Serves the study until `stop` returns true (polled every 100 ms) or
  /// forever when it is empty. `on_ready` receives the bound port.
  void serve(const std::function<void(int)>& on_ready = {}, const std::function<bool()>& stop = {});

  [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }
  [[nodiscard]] llm::Gateway& gateway() noexcept { return *gateway_; }

  [[nodiscard]] std::filesystem::path translations_path(TranslateMode mode) const;
  [[nodiscard]] std::filesystem::path records_path(eval::Condition condition) const;
  [[nodiscard]] std::filesystem::path human_translations_path() const;
  [[nodiscard]] std::filesystem::path study_cloze_path() const;

 private:
  corpus::CorpusFile load_corpus() const;
  translate::TranslatorConfig translator_config() const;
  eval::HintMap hints_for(eval::Condition condition, const corpus::CorpusFile& corpus) const;
  void write_manifest(const std::filesystem::path& output, const StageResult& result,
                      const llm::GatewayStats& before) const;

  PipelineConfig config_;
  PipelineOptions options_;
  std::shared_ptr<llm::ResponseCache> cache_;
  std::unique_ptr<llm::Gateway> gateway_;
};

/// Manifest path for an output file.
std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace emojinize::pipeline
