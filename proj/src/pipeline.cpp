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


#include "emojinize/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <thread>

#include "emojinize/error.hpp"
#include "emojinize/hash.hpp"
#include "emojinize/llm_backends.hpp"
#include "emojinize/study.hpp"
#include "emojinize/utf8.hpp"
#include "fileio.hpp"
#include "strings.hpp"

namespace emojinize::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 4> kModeNames{"single", "batch", "mwe", "multishot"};
constexpr std::string_view kScriptedPrefix = "scripted:";

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

// Reads one object of the config file, mirroring accepted values into the
// normalized form and rejecting keys it was never asked about.
class Section {
 public:
  Section(const json* j, std::string name, ordered_json& norm) : name_(std::move(name)), norm_(norm) {
    if (j && !j->is_null()) {
      if (!j->is_object()) invalid(name_ + " must be an object");
      j_ = j;
    }
    norm_ = ordered_json::object();
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!j_) return nullptr;
    auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string string(const std::string& key, std::string def) {
    const json* v = raw(key);
    if (v && !v->is_string()) invalid(where(key) + " must be a string");
    std::string out = v ? v->get<std::string>() : std::move(def);
    norm_[key] = out;
    return out;
  }

  std::optional<std::string> optional_string(const std::string& key) {
    const json* v = raw(key);
    if (!v) {
      norm_[key] = nullptr;
      return std::nullopt;
    }
    if (!v->is_string()) invalid(where(key) + " must be a string");
    norm_[key] = v->get<std::string>();
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (v && !v->is_boolean()) invalid(where(key) + " must be true or false");
    const bool out = v ? v->get<bool>() : def;
    norm_[key] = out;
    return out;
  }

  long long integer(const std::string& key, long long def, long long min, long long max) {
    const json* v = raw(key);
    if (v && !v->is_number_integer()) invalid(where(key) + " must be an integer");
    const long long out = v ? v->get<long long>() : def;
    if (out < min || out > max) {
      invalid(where(key) + " must be between " + std::to_string(min) + " and " + std::to_string(max));
    }
    norm_[key] = out;
    return out;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    const json* v = raw(key);
    if (v && !(v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0))) {
      invalid(where(key) + " must be a non-negative integer");
    }
    const std::uint64_t out = v ? v->get<std::uint64_t>() : def;
    norm_[key] = out;
    return out;
  }

  double number(const std::string& key, double def, double min, double max) {
    const json* v = raw(key);
    if (v && !v->is_number()) invalid(where(key) + " must be a number");
    const double out = v ? v->get<double>() : def;
    if (!(out >= min && out <= max)) {
      invalid(where(key) + " must be between " + std::to_string(min) + " and " + std::to_string(max));
    }
    norm_[key] = out;
    return out;
  }

  std::vector<eval::Condition> conditions(const std::string& key, std::vector<eval::Condition> def) {
    const json* v = raw(key);
    if (v) {
      if (!v->is_array() || v->empty()) invalid(where(key) + " must be a non-empty list of condition names");
      def.clear();
      for (const auto& c : *v) {
        if (!c.is_string()) invalid(where(key) + " must list condition names");
        try {
          const auto parsed = eval::parse_condition(c.get<std::string>());
          if (std::find(def.begin(), def.end(), parsed) != def.end()) invalid(where(key) + " repeats " + c.get<std::string>());
          def.push_back(parsed);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::ConfigInvalid) throw;
          invalid(where(key) + ": " + e.what());
        }
      }
    }
    ordered_json names = ordered_json::array();
    for (auto c : def) names.push_back(eval::to_string(c));
    norm_[key] = std::move(names);
    return def;
  }

  void put(const std::string& key, ordered_json value) { norm_[key] = std::move(value); }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items()) {
      if (!seen_.count(key)) invalid("unknown setting " + where(key));
    }
  }

  [[nodiscard]] std::string where(const std::string& key) const { return name_ + "." + key; }

 private:
  const json* j_ = nullptr;
  std::string name_;
  ordered_json& norm_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::vector<std::string> split_keys(std::string_view list) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto piece = detail::trim(list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

class OfflineBackend final : public llm::Backend {
 public:
  llm::ChatResponse send(const llm::ChatRequest&) override {
    throw Error(ErrorCode::TransportError, "network access is disabled in replay mode");
  }
};

ordered_json stats_delta(const llm::GatewayStats& after, const llm::GatewayStats& before) {
  return ordered_json{{"requests", after.requests - before.requests},
                      {"cache_hits", after.cache_hits - before.cache_hits},
                      {"network_calls", after.network_calls - before.network_calls},
                      {"failures", after.failures - before.failures}};
}

eval::RecordError record_error(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    return {std::string(to_string(e.code())), e.message()};
  } catch (const std::exception& e) {
    return {"InternalError", e.what()};
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

void append_lines(const fs::path& path, const std::vector<std::string>& lines) {
  if (lines.empty()) return;
  // Drop a torn tail left by an interrupted append before adding to it.
  if (fs::exists(path) && fs::file_size(path) > 0) {
    const auto existing = detail::read_file(path);
    if (existing.back() != '\n') {
      const auto cut = existing.rfind('\n');
      detail::write_file_atomic(path, cut == std::string::npos ? std::string() : existing.substr(0, cut + 1));
    }
  }
  std::string blob;
  for (const auto& l : lines) blob += l + "\n";
  detail::append_file(path, blob);
}

ordered_json span_json(const Span& s) { return ordered_json{{"start", s.start}, {"end", s.end}}; }

Span span_from(const json& j) { return Span{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()}; }

}  // namespace

std::string_view to_string(TranslateMode m) noexcept { return kModeNames[static_cast<std::size_t>(m)]; }

TranslateMode parse_translate_mode(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<TranslateMode>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown translation mode \"" + std::string(name) + "\"");
}

const std::vector<TranslateMode>& all_translate_modes() {
  static const std::vector<TranslateMode> kAll{TranslateMode::single, TranslateMode::batch, TranslateMode::mwe,
                                               TranslateMode::multishot};
  return kAll;
}

eval::Condition condition_for(TranslateMode mode) noexcept {
  switch (mode) {
    case TranslateMode::single:
      return eval::Condition::emojinize;
    case TranslateMode::batch:
      return eval::Condition::emojinize_batch;
    case TranslateMode::mwe:
      return eval::Condition::emojinize_mwe;
    case TranslateMode::multishot:
      return eval::Condition::emojinize_multishot;
  }
  return eval::Condition::emojinize;
}

std::optional<TranslateMode> mode_for(eval::Condition condition) noexcept {
  for (auto m : all_translate_modes()) {
    if (condition_for(m) == condition) return m;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration

std::string PipelineConfig::digest() const { return sha256_hex(normalized.dump()); }

std::optional<std::string> process_environment(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

PipelineConfig parse_config(const json& j, const fs::path& base_dir, const Environment& env) {
  if (!j.is_object()) invalid("configuration must be a JSON object");
  PipelineConfig c;
  ordered_json& norm = c.normalized;
  norm = ordered_json::object();
  static const std::set<std::string> kSections{"gateway", "models", "translator", "corpus", "evaluation", "study", "paths"};
  for (const auto& [key, value] : j.items()) {
    if (!kSections.count(key)) invalid("unknown section \"" + key + "\"");
  }
  auto section = [&](const char* name) {
    auto it = j.find(name);
    return it == j.end() ? nullptr : &*it;
  };

  {
    Section s(section("gateway"), "gateway", norm["gateway"]);
    auto& g = c.gateway;
    g.endpoint = s.string("endpoint", g.endpoint);
    if (auto e = env("EMOJINIZE_ENDPOINT"); e && !e->empty()) {
      g.endpoint = *e;
      s.put("endpoint", g.endpoint);
    }
    if (const json* keys = s.raw("api_keys")) {
      if (!keys->is_array()) invalid("gateway.api_keys must be a list of strings");
      for (const auto& k : *keys) {
        if (!k.is_string()) invalid("gateway.api_keys must be a list of strings");
        g.api_keys.push_back(k.get<std::string>());
      }
    }
    if (auto e = env("EMOJINIZE_API_KEYS"); e && !e->empty()) g.api_keys = split_keys(*e);
    g.max_in_flight = static_cast<std::size_t>(s.integer("max_in_flight", 8, 1, 1024));
    g.max_retries = static_cast<int>(s.integer("max_retries", 3, 0, 100));
    g.initial_backoff_ms = static_cast<int>(s.integer("initial_backoff_ms", 500, 0, 600000));
    g.rate_limit_cooldown_s = static_cast<int>(s.integer("rate_limit_cooldown_s", 30, 0, 86400));
    g.timeout_s = static_cast<int>(s.integer("timeout_s", 120, 1, 86400));
    const bool scripted = g.endpoint.rfind(kScriptedPrefix, 0) == 0;
    g.fixed_timestamps = s.boolean("fixed_timestamps", scripted);
    if (scripted) {
      const auto script = g.endpoint.substr(kScriptedPrefix.size());
      if (script.empty()) invalid("gateway.endpoint \"scripted:\" needs a rules file");
      g.script = resolve(base_dir, script);
    } else if (g.endpoint.rfind("http://", 0) != 0 && g.endpoint.rfind("https://", 0) != 0) {
      invalid("gateway.endpoint must be an http(s) URL or scripted:<file>");
    }
    s.finish();
  }
  {
    Section s(section("models"), "models", norm["models"]);
    auto& m = c.models;
    m.translator = s.string("translator", m.translator);
    m.guesser = s.string("guesser", m.guesser);
    m.matcher = s.string("matcher", m.matcher);
    m.quality_filter = s.string("quality_filter", m.quality_filter);
    m.tagger = s.string("tagger", m.tagger);
    for (const auto* name : {&m.translator, &m.guesser, &m.matcher, &m.quality_filter, &m.tagger}) {
      if (name->empty()) invalid("model names must not be empty");
    }
    s.finish();
  }
  {
    Section s(section("translator"), "translator", norm["translator"]);
    auto& t = c.translator;
    t.language = s.string("language", t.language);
    t.temperature = s.number("temperature", t.temperature, 0.0, 2.0);
    t.max_resamples = static_cast<int>(s.integer("max_resamples", t.max_resamples, 1, 100));
    t.max_tokens = static_cast<int>(s.integer("max_tokens", t.max_tokens, 1, 100000));
    t.candidates = static_cast<int>(s.integer("candidates", t.candidates, 1, 1000));
    t.guesses = static_cast<int>(s.integer("guesses", t.guesses, 1, 1000));
    t.candidate_temperature = s.number("candidate_temperature", t.candidate_temperature, 0.0, 2.0);
    t.guess_temperature = s.number("guess_temperature", t.guess_temperature, 0.0, 2.0);
    if (auto d = s.optional_string("demonstrations")) t.demonstrations = resolve(base_dir, *d);
    t.batch_max_spans = static_cast<std::size_t>(s.integer("batch_max_spans", 5, 1, 1000));
    s.finish();
  }
  {
    Section s(section("corpus"), "corpus", norm["corpus"]);
    auto& k = c.corpus;
    ordered_json sources = ordered_json::array();
    if (const json* list = s.raw("sources")) {
      if (!list->is_array()) invalid("corpus.sources must be a list");
      for (std::size_t i = 0; i < list->size(); ++i) {
        ordered_json entry;
        Section src(&(*list)[i], "corpus.sources[" + std::to_string(i) + "]", entry);
        corpus::SourceConfig sc;
        try {
          sc.kind = corpus::parse_source_kind(src.string("kind", "news"));
        } catch (const Error& e) {
          invalid(src.where("kind") + ": " + e.what());
        }
        const auto dir = src.optional_string("directory");
        if (!dir) invalid(src.where("directory") + " is required");
        sc.directory = resolve(base_dir, *dir);
        sc.count = static_cast<std::size_t>(src.integer("count", 0, 1, 10000000));
        src.finish();
        k.sources.push_back(std::move(sc));
        sources.push_back(std::move(entry));
      }
    }
    s.put("sources", std::move(sources));
    k.seed = s.seed("seed", k.seed);
    k.bounds.min_words = static_cast<std::size_t>(s.integer("min_words", 8, 1, 100000));
    k.bounds.max_words = static_cast<std::size_t>(s.integer("max_words", 60, 1, 100000));
    if (k.bounds.min_words > k.bounds.max_words) invalid("corpus.min_words exceeds corpus.max_words");
    if (auto p = s.optional_string("stopwords")) k.stopwords = resolve(base_dir, *p);
    if (auto p = s.optional_string("profanity")) k.profanity = resolve(base_dir, *p);
    if (auto p = s.optional_string("pos_lexicon")) k.pos_lexicon = resolve(base_dir, *p);
    k.quality_filter = s.boolean("quality_filter", k.quality_filter);
    k.tagger = s.string("tagger", k.tagger);
    if (k.tagger != "lexicon" && k.tagger != "llm") invalid("corpus.tagger must be \"lexicon\" or \"llm\"");
    s.finish();
  }
  {
    Section s(section("evaluation"), "evaluation", norm["evaluation"]);
    auto& e = c.evaluation;
    e.conditions = s.conditions("conditions", e.conditions);
    e.bootstrap_resamples = static_cast<std::size_t>(s.integer("bootstrap_resamples", 10000, 1, 100000000));
    e.bootstrap_seed = s.seed("bootstrap_seed", e.bootstrap_seed);
    if (auto p = s.optional_string("human_translations")) e.human_translations = resolve(base_dir, *p);
    e.guess_temperature = s.number("guess_temperature", e.guess_temperature, 0.0, 2.0);
    e.matcher_max_resamples = static_cast<int>(s.integer("matcher_max_resamples", 5, 1, 100));
    e.chunk_size = static_cast<std::size_t>(s.integer("chunk_size", 64, 1, 1000000));
    s.finish();
  }
  {
    Section s(section("study"), "study", norm["study"]);
    auto& st = c.study;
    st.batch_size = static_cast<std::size_t>(s.integer("batch_size", 10, 1, 100000));
    st.max_assignments = static_cast<std::size_t>(s.integer("max_assignments", 0, 0, 100000));
    st.host = s.string("host", st.host);
    st.port = static_cast<int>(s.integer("port", 8080, 0, 65535));
    if (auto p = s.optional_string("static_dir")) st.static_dir = resolve(base_dir, *p);
    st.cloze_conditions = s.conditions("cloze_conditions", st.cloze_conditions);
    s.finish();
  }
  {
    Section s(section("paths"), "paths", norm["paths"]);
    const auto work = resolve(base_dir, s.string("work_dir", "."));
    auto under = [&](const char* key, const char* def) {
      const auto v = s.optional_string(key);
      return v ? resolve(base_dir, *v) : (work / def).lexically_normal();
    };
    c.paths.cache = under("cache", "cache.jsonl");
    c.paths.corpus = under("corpus", "corpus.jsonl");
    c.paths.translations = under("translations", "translations");
    c.paths.records = under("records", "records");
    c.paths.reports = under("reports", "reports");
    c.paths.study = under("study", "study");
    s.finish();
  }
  return c;
}

PipelineConfig load_config(const fs::path& file, const Environment& env) {
  if (!fs::exists(file)) throw Error(ErrorCode::ConfigInvalid, "config file not found: " + file.string());
  json j;
  try {
    j = json::parse(detail::read_file(file));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "config " + file.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::absolute(file).parent_path(), env);
}

// ---------------------------------------------------------------------------
// Translation files

ordered_json to_json(const TranslationRecord& r) {
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["mode"] = to_string(r.mode);
  if (r.error) {
    j["error"] = ordered_json{{"code", r.error->code}, {"message", r.error->message}};
    return j;
  }
  j["hidden"] = span_json(r.hidden);
  j["hidden_surface"] = r.hidden_surface;
  j["emoji"] = r.emoji;
  j["spans"] = ordered_json::array();
  for (const auto& s : r.spans) j["spans"].push_back(span_json(s));
  j["translations"] = r.translations;
  j["raw_reply"] = r.raw_reply;
  j["resamples_used"] = r.resamples_used;
  if (r.utility) j["utility"] = *r.utility;
  if (!r.candidates.is_null()) j["candidates"] = r.candidates;
  return j;
}

TranslationRecord translation_record_from_json(const json& j) {
  TranslationRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.mode = parse_translate_mode(j.at("mode").get<std::string>());
  if (auto it = j.find("error"); it != j.end()) {
    r.error = eval::RecordError{it->at("code").get<std::string>(), it->value("message", std::string())};
    return r;
  }
  r.hidden = span_from(j.at("hidden"));
  r.hidden_surface = j.at("hidden_surface").get<std::string>();
  r.emoji = j.at("emoji").get<std::string>();
  for (const auto& s : j.at("spans")) r.spans.push_back(span_from(s));
  r.translations = j.at("translations").get<std::vector<std::string>>();
  r.raw_reply = j.value("raw_reply", std::string());
  r.resamples_used = j.value("resamples_used", 0);
  if (auto it = j.find("utility"); it != j.end()) r.utility = it->get<double>();
  if (auto it = j.find("candidates"); it != j.end()) r.candidates = *it;
  return r;
}

std::vector<TranslationRecord> read_translations(const fs::path& path) {
  if (!fs::exists(path)) return {};
  const auto text = detail::read_file(path);
  const auto lines = split_lines(text);
  const bool unterminated = !text.empty() && text.back() != '\n';
  std::vector<TranslationRecord> out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    TranslationRecord r;
    try {
      r = translation_record_from_json(json::parse(lines[i]));
    } catch (const std::exception& e) {
      if (unterminated && i + 1 == lines.size()) break;
      throw Error(ErrorCode::IoError, path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
    }
    auto [it, inserted] = slot.emplace(r.sample_id, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

eval::HintMap load_model_hints(const fs::path& path, const corpus::CorpusFile& corpus) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingStageInput, "translations not found: " + path.string());
  eval::HintMap hints;
  for (const auto& r : read_translations(path)) {
    if (r.errored()) continue;
    if (!corpus.find(r.sample_id)) {
      throw Error(ErrorCode::IoError, path.string() + " refers to unknown sample " + r.sample_id);
    }
    hints.insert_or_assign(r.sample_id, eval::Hint{text::parse_emoji_sequence(r.emoji), r.hidden, r.hidden_surface});
  }
  return hints;
}

fs::path manifest_path(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(PipelineConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  cache_ = std::make_shared<llm::ResponseCache>(config_.paths.cache);
  std::shared_ptr<llm::Backend> backend = options_.backend;
  if (!backend) {
    const auto& g = config_.gateway;
    if (options_.replay_only) {
      backend = std::make_shared<OfflineBackend>();
    } else if (!g.script.empty()) {
      backend = std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::load_rules(g.script));
    } else {
      if (g.api_keys.empty()) {
        throw Error(ErrorCode::ConfigInvalid, "no API keys configured (gateway.api_keys or EMOJINIZE_API_KEYS)");
      }
      llm::HttpBackendOptions http;
      http.base_url = g.endpoint;
      http.api_keys = g.api_keys;
      http.max_retries = g.max_retries;
      http.initial_backoff = std::chrono::milliseconds(g.initial_backoff_ms);
      http.rate_limit_cooldown = std::chrono::seconds(g.rate_limit_cooldown_s);
      http.timeout = std::chrono::seconds(g.timeout_s);
      backend = std::make_shared<llm::HttpBackend>(std::move(http));
    }
  }
  llm::GatewayOptions go;
  go.endpoint_id = config_.gateway.endpoint;
  go.max_in_flight = config_.gateway.max_in_flight;
  go.replay_only = options_.replay_only;
  if (config_.gateway.fixed_timestamps) go.timestamp = [] { return std::string("1970-01-01T00:00:00Z"); };
  gateway_ = std::make_unique<llm::Gateway>(std::move(backend), cache_, std::move(go));
}

Pipeline::~Pipeline() = default;

fs::path Pipeline::translations_path(TranslateMode mode) const {
  return config_.paths.translations / (std::string(to_string(mode)) + ".jsonl");
}

fs::path Pipeline::records_path(eval::Condition condition) const {
  return config_.paths.records / (std::string(eval::to_string(condition)) + ".jsonl");
}

fs::path Pipeline::human_translations_path() const {
  return config_.evaluation.human_translations.value_or(config_.paths.study / "translations.jsonl");
}

fs::path Pipeline::study_cloze_path() const { return config_.paths.study / "cloze.jsonl"; }

corpus::CorpusFile Pipeline::load_corpus() const { return corpus::read_corpus(config_.paths.corpus); }

translate::TranslatorConfig Pipeline::translator_config() const {
  translate::TranslatorConfig t;
  const auto& s = config_.translator;
  t.model = config_.models.translator;
  t.language = s.language;
  t.temperature = s.temperature;
  t.max_resamples = s.max_resamples;
  t.max_tokens = s.max_tokens;
  if (s.demonstrations) t.demonstrations = translate::load_demonstrations(*s.demonstrations);
  t.multishot.candidates = s.candidates;
  t.multishot.guesses = s.guesses;
  t.multishot.candidate_temperature = s.candidate_temperature;
  t.multishot.guess_temperature = s.guess_temperature;
  t.guesser.model = config_.models.guesser;
  t.matcher.model = config_.models.matcher;
  t.matcher.max_resamples = config_.evaluation.matcher_max_resamples;
  t.validate();
  return t;
}

eval::HintMap Pipeline::hints_for(eval::Condition condition, const corpus::CorpusFile& corpus) const {
  if (condition == eval::Condition::baseline) return {};
  if (condition == eval::Condition::human_translation) {
    return eval::load_human_translations(human_translations_path(), corpus);
  }
  return load_model_hints(translations_path(*mode_for(condition)), corpus);
}

void Pipeline::write_manifest(const fs::path& output, const StageResult& result,
                              const llm::GatewayStats& before) const {
  ordered_json m;
  m["stage"] = result.stage;
  m["output"] = output.filename().string();
  m["config_digest"] = config_.digest();
  m["seeds"] = ordered_json{{"corpus", config_.corpus.seed}, {"bootstrap", config_.evaluation.bootstrap_seed}};
  m["replay_only"] = options_.replay_only;
  m["cache"] = stats_delta(gateway_->stats(), before);
  m["summary"] = result.summary;
  detail::write_file_atomic(manifest_path(output), m.dump(2) + "\n");
}

namespace {

corpus::WordSet word_set_or(const std::optional<fs::path>& path, const corpus::WordSet& fallback) {
  return path ? corpus::load_word_list(*path) : fallback;
}

std::unique_ptr<corpus::Tagger> make_tagger(const PipelineConfig& c, llm::Gateway& gateway) {
  if (c.corpus.tagger == "llm") return std::make_unique<corpus::LlmTagger>(gateway, c.models.tagger);
  if (c.corpus.pos_lexicon) {
    return std::make_unique<corpus::LexiconTagger>(corpus::parse_pos_lexicon(detail::read_file(*c.corpus.pos_lexicon)));
  }
  return std::make_unique<corpus::LexiconTagger>();
}

std::string corpus_digest(const PipelineConfig& c) {
  ordered_json j{{"corpus", c.normalized["corpus"]},
                 {"quality_filter_model", c.models.quality_filter},
                 {"tagger_model", c.models.tagger}};
  return sha256_hex(j.dump());
}

}  // namespace

StageResult Pipeline::build_corpus() {
  const auto before = gateway_->stats();
  StageResult result{"corpus-build", {config_.paths.corpus}, ordered_json::object()};
  const auto digest = corpus_digest(config_);
  const auto manifest = manifest_path(config_.paths.corpus);

  if (fs::exists(config_.paths.corpus) && !options_.force) {
    std::optional<std::string> built_with;
    if (fs::exists(manifest)) {
      built_with = json::parse(detail::read_file(manifest)).at("summary").value("corpus_digest", std::string());
    }
    if (built_with && *built_with != digest) {
      throw Error(ErrorCode::ConfigInvalid, "corpus " + config_.paths.corpus.string() +
                                                " was built with other settings; rerun with --force to rebuild");
    }
    const auto existing = load_corpus();
    result.summary = ordered_json{{"reused", true}, {"entries", existing.entries.size()}, {"corpus_digest", digest}};
    return result;
  }

  if (config_.corpus.sources.empty()) throw Error(ErrorCode::ConfigInvalid, "corpus.sources is empty");
  corpus::CorpusConfig cc;
  cc.sources = config_.corpus.sources;
  cc.seed = config_.corpus.seed;
  cc.bounds = config_.corpus.bounds;
  cc.stopwords = word_set_or(config_.corpus.stopwords, corpus::bundled_stopwords());
  cc.profanity = word_set_or(config_.corpus.profanity, corpus::bundled_profanity());
  if (config_.corpus.quality_filter) {
    cc.quality = corpus::QualityFilterConfig{config_.models.quality_filter, config_.translator.max_resamples};
  }
  for (const auto& src : cc.sources) {
    if (!fs::is_directory(src.directory)) {
      throw Error(ErrorCode::MissingStageInput, "source directory not found: " + src.directory.string());
    }
  }
  auto tagger = make_tagger(config_, *gateway_);
  const auto built = corpus::build_corpus(cc, *tagger, gateway_.get());
  corpus::write_corpus(config_.paths.corpus, built);
  result.summary = ordered_json{{"reused", false}, {"entries", built.entries.size()}, {"corpus_digest", digest},
                                {"settings", ordered_json::parse(built.manifest.settings.dump())}};
  write_manifest(config_.paths.corpus, result, before);
  return result;
}

StageResult Pipeline::translate(TranslateMode mode) {
  const auto before = gateway_->stats();
  const auto corpus = load_corpus();
  const auto out_path = translations_path(mode);
  StageResult result{"translate", {out_path}, ordered_json::object()};
  const auto cfg = translator_config();

  std::set<std::string> done;
  for (const auto& r : read_translations(out_path)) {
    if (!r.errored()) done.insert(r.sample_id);
  }
  std::vector<const corpus::CorpusEntry*> pending;
  for (const auto& e : corpus.entries) {
    if (!done.count(e.sample.id)) pending.push_back(&e);
  }

  std::unique_ptr<corpus::Tagger> tagger;
  corpus::WordSet stopwords;
  if (mode == TranslateMode::batch) {
    tagger = make_tagger(config_, *gateway_);
    stopwords = word_set_or(config_.corpus.stopwords, corpus::bundled_stopwords());
  }

  std::size_t translated = 0;
  std::size_t errored = 0;
  std::size_t resamples = 0;
  const std::size_t chunk = config_.evaluation.chunk_size;
  for (std::size_t begin = 0; begin < pending.size(); begin += chunk) {
    const std::size_t end = std::min(pending.size(), begin + chunk);
    std::vector<TranslationRecord> records(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      records[k - begin].sample_id = pending[k]->sample.id;
      records[k - begin].mode = mode;
    }

    // Marked inputs and the span each one's evaluation hides.
    std::vector<std::optional<translate::MarkedText>> marked(end - begin);
    std::vector<Span> hidden(end - begin);
    if (mode == TranslateMode::mwe) {
      std::vector<std::string> texts;
      for (std::size_t k = begin; k < end; ++k) texts.push_back(pending[k]->sample.text);
      const auto units = translate::identify_units_many(texts, cfg, *gateway_);
      for (std::size_t i = 0; i < units.size(); ++i) {
        if (!units[i].units) {
          records[i].error = record_error(units[i].error);
          continue;
        }
        hidden[i] = translate::choose_unit(texts[i], *units[i].units, pending[begin + i]->target.span);
        marked[i] = translate::MarkedText{texts[i], {hidden[i]}};
      }
    } else {
      for (std::size_t i = 0; i < marked.size(); ++i) {
        const auto& entry = *pending[begin + i];
        hidden[i] = entry.target.span;
        std::vector<Span> spans{entry.target.span};
        if (mode == TranslateMode::batch) {
          try {
            for (const auto& t : corpus::eligible_targets(entry.sample, *tagger, stopwords)) {
              if (spans.size() >= config_.translator.batch_max_spans) break;
              if (t.span != entry.target.span) spans.push_back(t.span);
            }
          } catch (...) {
            records[i].error = record_error(std::current_exception());
            continue;
          }
          std::sort(spans.begin(), spans.end());
        }
        marked[i] = translate::MarkedText{entry.sample.text, std::move(spans)};
      }
    }

    if (mode == TranslateMode::multishot) {
      // Items run one after another; each one's requests are already batched.
      for (std::size_t i = 0; i < marked.size(); ++i) {
        const auto& entry = *pending[begin + i];
        try {
          const auto item = eval::make_cloze_item(entry, eval::Condition::baseline, nullptr);
          const auto best = translate::translate_multishot(*marked[i], item, cfg, *gateway_);
          auto& r = records[i];
          r.spans = marked[i]->spans;
          r.translations = {best.translation.sequences.front().text()};
          r.raw_reply = best.translation.raw_reply;
          r.resamples_used = best.translation.resamples_used;
          r.utility = best.utility;
          r.candidates = ordered_json::array();
          for (const auto& c : best.candidates) {
            r.candidates.push_back(ordered_json{
                {"emoji", c.sequence.text()}, {"sample_index", c.sample_index}, {"utility", c.utility}});
          }
        } catch (...) {
          records[i].error = record_error(std::current_exception());
        }
      }
    } else {
      std::vector<translate::MarkedText> inputs;
      std::vector<std::size_t> slot;
      for (std::size_t i = 0; i < marked.size(); ++i) {
        if (!marked[i]) continue;
        inputs.push_back(*marked[i]);
        slot.push_back(i);
      }
      const auto outcomes = translate::translate_many(inputs, cfg, *gateway_);
      for (std::size_t k = 0; k < outcomes.size(); ++k) {
        auto& r = records[slot[k]];
        if (!outcomes[k].ok()) {
          r.error = record_error(outcomes[k].error);
          continue;
        }
        const auto& t = *outcomes[k].result;
        r.spans = inputs[k].spans;
        for (const auto& s : t.sequences) r.translations.push_back(s.text());
        r.raw_reply = t.raw_reply;
        r.resamples_used = t.resamples_used;
      }
    }

    std::vector<std::string> lines;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto& r = records[i];
      if (!r.errored()) {
        const auto& text = pending[begin + i]->sample.text;
        r.hidden = hidden[i];
        r.hidden_surface = utf8::substr(text, hidden[i].start, hidden[i].end);
        const auto pos = std::find(r.spans.begin(), r.spans.end(), hidden[i]) - r.spans.begin();
        r.emoji = r.translations.at(static_cast<std::size_t>(pos));
        resamples += static_cast<std::size_t>(r.resamples_used);
        ++translated;
      } else {
        ++errored;
      }
      lines.push_back(to_json(r).dump());
    }
    append_lines(out_path, lines);
  }
  if (pending.empty() && !fs::exists(out_path)) detail::write_file_atomic(out_path, "");

  result.summary = ordered_json{{"mode", to_string(mode)},
                                {"reused", done.size()},
                                {"translated", translated},
                                {"errored", errored},
                                {"resamples", resamples}};
  write_manifest(out_path, result, before);
  return result;
}

StageResult Pipeline::evaluate(std::span<const eval::Condition> conditions) {
  const auto before = gateway_->stats();
  const auto corpus = load_corpus();
  std::vector<eval::Condition> list(conditions.begin(), conditions.end());
  if (list.empty()) list = config_.evaluation.conditions;
  StageResult result{"evaluate", {}, ordered_json::object()};

  eval::RunOptions run;
  run.guesser.model = config_.models.guesser;
  run.guesser.temperature = config_.evaluation.guess_temperature;
  run.matcher.model = config_.models.matcher;
  run.matcher.max_resamples = config_.evaluation.matcher_max_resamples;
  run.chunk_size = config_.evaluation.chunk_size;

  // Load every input first so a missing stage fails before any work.
  std::vector<eval::HintMap> hints;
  for (auto c : list) hints.push_back(hints_for(c, corpus));

  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto c = list[i];
    const auto stage_before = gateway_->stats();
    run.records_path = records_path(c);
    eval::RunSummary summary;
    const auto records = eval::run_condition(corpus, c, c == eval::Condition::baseline ? nullptr : &hints[i], run,
                                             *gateway_, &summary);
    std::size_t matched = 0;
    for (const auto& r : records) matched += r.matched.value_or(false) ? 1 : 0;
    StageResult part{"evaluate",
                     {run.records_path},
                     ordered_json{{"condition", eval::to_string(c)},
                                  {"reused", summary.reused},
                                  {"scored", summary.scored},
                                  {"errored", summary.errored},
                                  {"matched", matched}}};
    write_manifest(run.records_path, part, stage_before);
    result.outputs.push_back(run.records_path);
    result.summary[std::string(eval::to_string(c))] = part.summary;
  }
  (void)before;
  return result;
}

StageResult Pipeline::report() {
  const auto before = gateway_->stats();
  const auto corpus = load_corpus();
  const auto& conditions = config_.evaluation.conditions;

  eval::ReportInputs in;
  in.bootstrap.resamples = config_.evaluation.bootstrap_resamples;
  in.bootstrap.seed = config_.evaluation.bootstrap_seed;
  std::map<eval::Condition, eval::HintMap> hints;
  for (auto c : conditions) {
    const auto path = records_path(c);
    if (!fs::exists(path)) {
      throw Error(ErrorCode::MissingStageInput, "no records for condition " + std::string(eval::to_string(c)) +
                                                    " (" + path.string() + "); run evaluate first");
    }
    for (auto& r : eval::latest_records(eval::read_records(path))) in.records.push_back(std::move(r));
    if (c != eval::Condition::baseline) hints.emplace(c, hints_for(c, corpus));
  }

  // Human guesses collected by the study service are scored here.
  std::size_t human = 0;
  if (fs::exists(study_cloze_path())) {
    auto records = eval::latest_records(eval::read_records(study_cloze_path()));
    eval::MatcherConfig matcher{config_.models.matcher, config_.evaluation.matcher_max_resamples};
    eval::score_records(
        records,
        [&](const eval::GuessRecord& r) -> std::optional<std::string> {
          const auto* entry = corpus.find(r.item_id);
          if (!entry) return std::nullopt;
          if (r.condition == eval::Condition::baseline) return entry->target.surface;
          auto it = hints.find(r.condition);
          if (it == hints.end()) {
            try {
              it = hints.emplace(r.condition, hints_for(r.condition, corpus)).first;
            } catch (const Error&) {
              return std::nullopt;
            }
          }
          const auto h = it->second.find(r.item_id);
          if (h == it->second.end()) return std::nullopt;
          return h->second.hidden_surface;
        },
        matcher, *gateway_);
    human = records.size();
    for (auto& r : records) in.records.push_back(std::move(r));
  }

  for (const auto& [c, map] : hints) {
    std::vector<text::EmojiSequence> seqs;
    for (const auto& e : corpus.entries) {
      if (auto it = map.find(e.sample.id); it != map.end()) seqs.push_back(it->second.emoji);
    }
    in.translations.emplace(std::string(eval::to_string(c)), std::move(seqs));
  }

  const auto report = eval::build_report(in);
  ordered_json doc;
  doc["samples"] = corpus.entries.size();
  const auto body = eval::report_to_json(report);
  for (const auto& [key, value] : body.items()) doc[key] = value;

  const auto& dir = config_.paths.reports;
  const fs::path json_path = dir / "report.json";
  const fs::path csv_path = dir / "outcomes.csv";
  const fs::path series_path = dir / "accuracy_series.csv";
  detail::write_file_atomic(json_path, doc.dump(2) + "\n");
  detail::write_file_atomic(csv_path, eval::records_csv(in.records));
  detail::write_file_atomic(series_path, eval::accuracy_series_csv(report));

  ordered_json ordering = ordered_json::array();
  for (auto c : report.ordering) ordering.push_back(eval::to_string(c));
  StageResult result{"report",
                     {json_path, csv_path, series_path},
                     ordered_json{{"records", in.records.size()}, {"human_records", human}, {"ordering", ordering}}};
  for (const auto& p : result.outputs) write_manifest(p, result, before);
  return result;
}

std::vector<StageResult> Pipeline::run_all() {
  std::vector<StageResult> out;
  out.push_back(build_corpus());
  for (auto c : config_.evaluation.conditions) {
    if (auto m = mode_for(c)) out.push_back(translate(*m));
  }
  out.push_back(evaluate());
  out.push_back(report());
  return out;
}

void Pipeline::serve(const std::function<void(int)>& on_ready, const std::function<bool()>& stop) {
  auto corpus = load_corpus();
  std::map<eval::Condition, eval::HintMap> hints;
  for (auto c : config_.study.cloze_conditions) {
    if (c == eval::Condition::baseline) continue;
    try {
      hints.emplace(c, hints_for(c, corpus));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingStageInput) throw;
      std::cerr << "study: no hints for " << eval::to_string(c) << " yet; not offering it\n";
    }
  }
  study::StudyConfig sc;
  sc.batch_size = config_.study.batch_size;
  sc.max_assignments = config_.study.max_assignments;
  sc.cloze_conditions = config_.study.cloze_conditions;
  sc.state_path = config_.paths.study / "state.json";
  sc.translate_records = config_.paths.study / "translations.jsonl";
  sc.cloze_records = study_cloze_path();
  study::StudyService service(std::move(corpus), std::move(hints), std::move(sc));
  study::ServerOptions so;
  so.host = config_.study.host;
  so.port = config_.study.port;
  if (config_.study.static_dir) so.static_dir = *config_.study.static_dir;
  study::StudyServer server(service, so);
  if (!stop) {
    server.run();
    return;
  }
  const int port = server.start();
  if (on_ready) on_ready(port);
  while (!stop()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

}  // namespace emojinize::pipeline
