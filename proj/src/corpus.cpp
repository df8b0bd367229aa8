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

#include "emojinize/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "emojinize/error.hpp"
#include "emojinize/hash.hpp"
#include "emojinize/utf8.hpp"
#include "fileio.hpp"
#include "resources.hpp"
#include "strings.hpp"

namespace emojinize::corpus {
namespace {

constexpr std::array<std::string_view, 6> kWordClassNames{"noun", "verb", "adjective", "adverb", "proper_noun", "other"};

using detail::read_file;

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_apostrophe(std::string_view s) {
  return s.find('\'') != std::string_view::npos || s.find("\xE2\x80\x99") != std::string_view::npos;
}

std::string strip_possessive(std::string_view s) {
  if (ends_with(s, "'s")) return std::string(s.substr(0, s.size() - 2));
  if (ends_with(s, "\xE2\x80\x99s")) return std::string(s.substr(0, s.size() - 4));
  return std::string(s);
}

bool starts_upper(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

bool all_upper(std::string_view s) {
  bool letters = false;
  for (char c : s) {
    if (std::islower(static_cast<unsigned char>(c))) return false;
    letters = letters || std::isupper(static_cast<unsigned char>(c));
  }
  return letters;
}

std::string short_digest(std::string_view data) { return sha256_hex(data).substr(0, 12); }

std::string word_set_digest(const WordSet& set) {
  std::vector<std::string> sorted(set.begin(), set.end());
  std::sort(sorted.begin(), sorted.end());
  return short_digest(detail::join(sorted, "\n"));
}

std::string_view strip_code_fence(std::string_view s) {
  s = detail::trim(s);
  if (s.substr(0, 3) != "```") return s;
  const auto nl = s.find('\n');
  if (nl == std::string_view::npos) return s;
  s.remove_prefix(nl + 1);
  s = detail::trim(s);
  if (ends_with(s, "```")) s.remove_suffix(3);
  return detail::trim(s);
}

}  // namespace

std::string_view to_string(SourceKind k) noexcept { return k == SourceKind::news ? "news" : "ebook"; }

SourceKind parse_source_kind(std::string_view name) {
  if (name == "news") return SourceKind::news;
  if (name == "ebook") return SourceKind::ebook;
  throw Error(ErrorCode::InvalidArgument, "unknown source kind \"" + std::string(name) + "\"");
}

RawDocument load_document(const std::filesystem::path& file, SourceKind kind, std::string origin) {
  const std::string content = read_file(file);
  RawDocument doc{kind, std::move(origin), {}};
  doc.blocks = kind == SourceKind::news ? extract_paragraphs(content) : extract_ebook_blocks(content);
  if (doc.blocks.empty()) throw Error(ErrorCode::NoParagraphs, "no text blocks in " + file.string());
  return doc;
}

// ---------------------------------------------------------------------------
// Lexicons

std::string_view to_string(WordClass c) noexcept { return kWordClassNames[static_cast<std::size_t>(c)]; }

WordClass parse_word_class(std::string_view name) {
  for (std::size_t i = 0; i < kWordClassNames.size(); ++i) {
    if (kWordClassNames[i] == name) return static_cast<WordClass>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown word class \"" + std::string(name) + "\"");
}

bool is_content_class(WordClass c) noexcept {
  return c == WordClass::noun || c == WordClass::verb || c == WordClass::adjective || c == WordClass::adverb;
}

WordSet parse_word_list(std::string_view text) {
  WordSet out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.insert(detail::to_lower_ascii(t));
  }
  return out;
}

WordSet load_word_list(const std::filesystem::path& path) { return parse_word_list(read_file(path)); }

const WordSet& bundled_stopwords() {
  static const WordSet set = parse_word_list(resources::stopwords);
  return set;
}

const WordSet& bundled_profanity() {
  static const WordSet set = parse_word_list(resources::profanity_lexicon);
  return set;
}

PosLexicon parse_pos_lexicon(std::string_view text) {
  PosLexicon out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::ConfigInvalid, "POS lexicon line " + std::to_string(lineno) + " lacks a tab");
    }
    out[detail::to_lower_ascii(t.substr(0, tab))] = parse_word_class(detail::trim(t.substr(tab + 1)));
  }
  return out;
}

const PosLexicon& bundled_pos_lexicon() {
  static const PosLexicon lex = parse_pos_lexicon(resources::pos_lexicon);
  return lex;
}

std::vector<std::string> lemma_candidates(std::string_view word) {
  const std::string w = strip_possessive(detail::to_lower_ascii(word));
  std::vector<std::string> out{w};
  auto add = [&](std::string s) {
    if (s.size() >= 2 && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  };
  auto stem = [&](std::size_t n) { return w.substr(0, w.size() - n); };
  auto undouble = [&](const std::string& s) {
    if (s.size() >= 3 && s[s.size() - 1] == s[s.size() - 2] && !is_vowel(s.back())) add(s.substr(0, s.size() - 1));
  };
  if (ends_with(w, "ies") && w.size() > 4) add(stem(3) + "y");
  if (ends_with(w, "es")) add(stem(2));
  if (ends_with(w, "s") && !ends_with(w, "ss")) add(stem(1));
  if (ends_with(w, "ied")) add(stem(3) + "y");
  if (ends_with(w, "ed")) {
    add(stem(2));
    add(stem(1));
    undouble(stem(2));
  }
  if (ends_with(w, "ing")) {
    add(stem(3));
    add(stem(3) + "e");
    undouble(stem(3));
  }
  if (ends_with(w, "ier")) add(stem(3) + "y");
  if (ends_with(w, "iest")) add(stem(4) + "y");
  if (ends_with(w, "er")) {
    add(stem(2));
    add(stem(1));
    undouble(stem(2));
  }
  if (ends_with(w, "ers")) add(stem(3));
  if (ends_with(w, "est")) {
    add(stem(3));
    undouble(stem(3));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filters

FilterVerdict profanity_filter(std::string_view text, const WordSet& lexicon) {
  bool any_word = false;
  for (const auto& t : tokenize(text)) {
    if (t.kind == TokenKind::punctuation) continue;
    any_word = true;
    std::vector<std::string> parts{t.text};
    if (t.text.find('-') != std::string::npos) {
      std::string part;
      for (char c : t.text + "-") {
        if (c == '-') {
          if (!part.empty()) parts.push_back(part);
          part.clear();
        } else {
          part.push_back(c);
        }
      }
    }
    for (const auto& p : parts) {
      for (const auto& lemma : lemma_candidates(p)) {
        if (lexicon.count(lemma)) return FilterVerdict::fail(lemma);
      }
    }
  }
  if (!any_word) return FilterVerdict::fail("empty");
  return FilterVerdict::ok();
}

namespace {

constexpr std::string_view kQualitySystem =
    "You screen short text passages for a reading study. For each passage, decide whether it shows any of "
    "these problems: spam, such as advertising or a request to subscribe to a newsletter; text that is not "
    "in English; formatting problems, such as broken sentences, markup, navigation text or lists; and "
    "violent or sexual content, including implicit and indirect descriptions. Reply with a JSON object "
    "with the boolean fields \"spam\", \"non_english\", \"formatting\" and \"violent_or_sexual\".";

constexpr std::string_view kQualityDemoClean =
    "The city council approved a new budget for road repairs after a long debate on Tuesday evening.";
constexpr std::string_view kQualityDemoSpam =
    "Sign up today and get twenty percent off your next order, plus free shipping on all items!";

std::string quality_reply(bool spam) {
  nlohmann::ordered_json j;
  j["spam"] = spam;
  j["non_english"] = false;
  j["formatting"] = false;
  j["violent_or_sexual"] = false;
  return j.dump();
}

}  // namespace

llm::ChatRequest build_quality_request(std::string_view text, const QualityFilterConfig& config, int sample_index) {
  llm::ChatRequest req;
  req.model = config.model;
  req.temperature = 0.0;
  req.max_tokens = 64;
  req.sample_index = sample_index;
  req.messages.push_back(llm::system_message(std::string(kQualitySystem)));
  req.messages.push_back(llm::user_message(std::string(kQualityDemoClean)));
  req.messages.push_back(llm::assistant_message(quality_reply(false)));
  req.messages.push_back(llm::user_message(std::string(kQualityDemoSpam)));
  req.messages.push_back(llm::assistant_message(quality_reply(true)));
  req.messages.push_back(llm::user_message(std::string(text)));
  return req;
}

std::optional<FilterVerdict> parse_quality_reply(std::string_view reply) {
  auto j = nlohmann::json::parse(strip_code_fence(reply), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  std::optional<std::string> failed;
  for (auto cat : kQualityCategories) {
    const std::string key(cat);
    if (!j.contains(key) || !j[key].is_boolean()) return std::nullopt;
    if (j[key].get<bool>() && !failed) failed = key;
  }
  return failed ? FilterVerdict::fail(*failed) : FilterVerdict::ok();
}

FilterVerdict llm_quality_filter(std::string_view text, const QualityFilterConfig& config, llm::Gateway& gateway) {
  const std::string t(text);
  return llm_quality_filter_many(std::span(&t, 1), config, gateway).front();
}

std::vector<FilterVerdict> llm_quality_filter_many(std::span<const std::string> texts,
                                                   const QualityFilterConfig& config, llm::Gateway& gateway) {
  std::vector<FilterVerdict> out(texts.size(), FilterVerdict::fail("unverifiable"));
  std::vector<std::size_t> open(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) open[i] = i;
  for (int round = 0; round < std::max(1, config.max_resamples) && !open.empty(); ++round) {
    std::vector<llm::ChatRequest> reqs;
    for (auto i : open) reqs.push_back(build_quality_request(texts[i], config, round));
    auto replies = gateway.complete_many(reqs);
    std::vector<std::size_t> still_open;
    for (std::size_t k = 0; k < open.size(); ++k) {
      if (auto v = parse_quality_reply(replies[k].value().content)) {
        out[open[k]] = *v;
      } else {
        still_open.push_back(open[k]);
      }
    }
    open = std::move(still_open);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Taggers

LexiconTagger::LexiconTagger(PosLexicon lexicon) : lexicon_(std::move(lexicon)) {
  std::vector<std::string> lines;
  lines.reserve(lexicon_.size());
  for (const auto& [w, c] : lexicon_) lines.push_back(w + "\t" + std::string(to_string(c)));
  std::sort(lines.begin(), lines.end());
  digest_ = short_digest(detail::join(lines, "\n"));
}

std::string LexiconTagger::version() const { return "lexicon:" + digest_; }

WordClass LexiconTagger::classify(const Token& token) const {
  if (token.kind != TokenKind::word) return WordClass::other;
  const std::string surface = strip_possessive(token.text);
  if (has_apostrophe(surface)) return WordClass::other;
  const std::string lower = detail::to_lower_ascii(surface);
  auto lookup = [&](const std::string& w) -> std::optional<WordClass> {
    if (auto it = lexicon_.find(w); it != lexicon_.end()) return it->second;
    return std::nullopt;
  };

  const auto direct = lookup(lower);
  if (surface.size() > 1 && all_upper(surface)) return WordClass::proper_noun;
  if (direct == WordClass::proper_noun) return WordClass::proper_noun;
  if (starts_upper(surface) && (!token.sentence_initial || !direct)) {
    // Mid-sentence capitals, and unknown words capitalized at the start of a
    // sentence, are treated as names.
    if (!token.sentence_initial) return WordClass::proper_noun;
    bool known_lemma = false;
    for (const auto& l : lemma_candidates(lower)) known_lemma = known_lemma || lexicon_.count(l);
    if (!known_lemma) return WordClass::proper_noun;
  }
  const auto lemmas = lemma_candidates(lower);
  if (direct == WordClass::adjective && (ends_with(lower, "ed") || ends_with(lower, "ing"))) {
    // Participles listed as adjectives read as verbs when the base is a verb.
    for (std::size_t i = 1; i < lemmas.size(); ++i) {
      if (lookup(lemmas[i]) == WordClass::verb) return WordClass::verb;
    }
  }
  if (direct) return *direct;
  for (std::size_t i = 1; i < lemmas.size(); ++i) {
    if (auto c = lookup(lemmas[i]); c && *c != WordClass::proper_noun) {
      if (*c == WordClass::verb || *c == WordClass::noun) {
        if (ends_with(lower, "ing") || ends_with(lower, "ed")) return WordClass::verb;
      }
      return *c;
    }
  }
  if (const auto dash = lower.rfind('-'); dash != std::string::npos) {
    if (auto c = lookup(lower.substr(dash + 1)); c && is_content_class(*c)) return *c;
  }
  static const std::array<std::pair<std::string_view, WordClass>, 26> kSuffixes{{
      {"ly", WordClass::adverb},        {"ing", WordClass::verb},         {"ed", WordClass::verb},
      {"ize", WordClass::verb},         {"ise", WordClass::verb},         {"ify", WordClass::verb},
      {"tion", WordClass::noun},        {"sion", WordClass::noun},        {"ness", WordClass::noun},
      {"ment", WordClass::noun},        {"ity", WordClass::noun},         {"ism", WordClass::noun},
      {"ist", WordClass::noun},         {"ship", WordClass::noun},        {"hood", WordClass::noun},
      {"ance", WordClass::noun},        {"ence", WordClass::noun},        {"ous", WordClass::adjective},
      {"ful", WordClass::adjective},    {"ive", WordClass::adjective},    {"able", WordClass::adjective},
      {"ible", WordClass::adjective},   {"less", WordClass::adjective},   {"ic", WordClass::adjective},
      {"ish", WordClass::adjective},    {"al", WordClass::adjective},
  }};
  for (const auto& [suffix, cls] : kSuffixes) {
    if (lower.size() > suffix.size() + 2 && ends_with(lower, suffix)) return cls;
  }
  return WordClass::noun;
}

std::vector<WordClass> LexiconTagger::tag(std::string_view, std::span<const Token> tokens) {
  std::vector<WordClass> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(classify(t));
  return out;
}

LlmTagger::LlmTagger(llm::Gateway& gateway, std::string model, int max_resamples)
    : gateway_(gateway), model_(std::move(model)), max_resamples_(std::max(1, max_resamples)) {}

llm::ChatRequest LlmTagger::build_request(std::span<const Token> tokens, int sample_index) const {
  nlohmann::json words = nlohmann::json::array();
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::word) words.push_back(t.text);
  }
  llm::ChatRequest req;
  req.model = model_;
  req.temperature = 0.0;
  req.max_tokens = 1024;
  req.sample_index = sample_index;
  req.messages.push_back(llm::system_message(
      "Label the word class of every token in the given JSON list, reading the tokens as running text. Use "
      "noun, verb, adjective, adverb, proper_noun, or other for everything else. Reply with a JSON object "
      "{\"tags\": [...]} holding one label per token, in order."));
  req.messages.push_back(llm::user_message(R"(["The","old","sailor","quickly","left","Lisbon"])"));
  req.messages.push_back(llm::assistant_message(R"({"tags":["other","adjective","noun","adverb","verb","proper_noun"]})"));
  req.messages.push_back(llm::user_message(words.dump()));
  return req;
}

std::vector<WordClass> LlmTagger::tag(std::string_view, std::span<const Token> tokens) {
  std::size_t words = 0;
  for (const auto& t : tokens) words += t.kind == TokenKind::word;
  std::string last_reason = "no reply";
  for (int round = 0; round < max_resamples_; ++round) {
    const auto reply = gateway_.complete(build_request(tokens, round)).content;
    auto j = nlohmann::json::parse(strip_code_fence(reply), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("tags") || !j["tags"].is_array() ||
        j["tags"].size() != words) {
      last_reason = "reply is not a tag list of the right length";
      continue;
    }
    try {
      std::vector<WordClass> out;
      std::size_t k = 0;
      for (const auto& t : tokens) {
        out.push_back(t.kind == TokenKind::word ? parse_word_class(j["tags"][k++].get<std::string>()) : WordClass::other);
      }
      return out;
    } catch (const std::exception& e) {
      last_reason = e.what();
    }
  }
  throw Error(ErrorCode::ResampleBudgetExhausted, "word class tagging failed: " + last_reason);
}

// ---------------------------------------------------------------------------
// Samples and targets

std::string sample_id(SourceKind kind, std::string_view origin, std::string_view text) {
  return std::string(to_string(kind)) + "-" + short_digest(std::string(origin) + "\n" + std::string(text));
}

std::vector<TargetSelection> eligible_targets(const TextSample& sample, Tagger& tagger, const WordSet& stopwords) {
  const auto tokens = tokenize(sample.text);
  const auto classes = tagger.tag(sample.text, tokens);
  if (classes.size() != tokens.size()) throw Error(ErrorCode::InvalidArgument, "tagger returned a misaligned tag list");
  std::map<std::string, std::size_t> occurrences;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::word) ++occurrences[detail::to_lower_ascii(t.text)];
  }
  std::vector<TargetSelection> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    // A word that recurs in the passage would give its own blank away.
    if (t.kind == TokenKind::word && occurrences[detail::to_lower_ascii(t.text)] > 1) continue;
    if (t.kind != TokenKind::word || !is_content_class(classes[i])) continue;
    if (has_apostrophe(t.text)) continue;
    if (stopwords.count(detail::to_lower_ascii(t.text))) continue;
    eligible.push_back(TargetSelection{sample.id, t.span, t.text, classes[i]});
  }
  return eligible;
}

TargetSelection select_target_word(const TextSample& sample, std::uint64_t seed, Tagger& tagger,
                                   const WordSet& stopwords) {
  auto eligible = eligible_targets(sample, tagger, stopwords);
  if (eligible.empty()) throw Error(ErrorCode::NoEligibleToken, "no eligible target word in sample " + sample.id);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return std::move(eligible[pick(rng)]);
}

// ---------------------------------------------------------------------------
// Corpus files

const CorpusEntry* CorpusFile::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.sample.id == id) return &e;
  }
  return nullptr;
}

std::string serialize_corpus(const CorpusFile& corpus) {
  std::string out;
  nlohmann::ordered_json header;
  header["manifest"]["counts"] = corpus.manifest.counts;
  header["manifest"]["seed"] = corpus.manifest.seed;
  header["manifest"]["settings"] = corpus.manifest.settings;
  out += header.dump() + "\n";
  for (const auto& e : corpus.entries) {
    nlohmann::ordered_json j;
    j["id"] = e.sample.id;
    j["text"] = e.sample.text;
    j["source_kind"] = to_string(e.sample.source_kind);
    j["origin"] = e.sample.origin;
    j["target"]["start"] = e.target.span.start;
    j["target"]["end"] = e.target.span.end;
    j["target"]["surface"] = e.target.surface;
    j["target"]["word_class"] = to_string(e.target.word_class);
    out += j.dump() + "\n";
  }
  return out;
}

CorpusFile parse_corpus(std::string_view jsonl) {
  CorpusFile corpus;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    const std::string where = "corpus line " + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::IoError, where + " is not a JSON object");
    try {
      if (!have_header) {
        if (!j.contains("manifest")) throw Error(ErrorCode::IoError, "corpus file lacks a manifest header");
        const auto& m = j["manifest"];
        corpus.manifest.counts = m.at("counts").get<std::map<std::string, std::size_t>>();
        corpus.manifest.seed = m.at("seed").get<std::uint64_t>();
        corpus.manifest.settings = m.value("settings", nlohmann::json::object());
        have_header = true;
        continue;
      }
      CorpusEntry e;
      e.sample.id = j.at("id").get<std::string>();
      e.sample.text = j.at("text").get<std::string>();
      e.sample.source_kind = parse_source_kind(j.at("source_kind").get<std::string>());
      e.sample.origin = j.at("origin").get<std::string>();
      const auto& t = j.at("target");
      e.target.sample_id = e.sample.id;
      e.target.span = Span{t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>()};
      e.target.surface = t.at("surface").get<std::string>();
      e.target.word_class = parse_word_class(t.at("word_class").get<std::string>());
      if (e.target.span.end > utf8::length(e.sample.text) || e.target.span.start >= e.target.span.end ||
          utf8::substr(e.sample.text, e.target.span.start, e.target.span.end) != e.target.surface) {
        throw Error(ErrorCode::IoError, "target span does not match its surface");
      }
      ++seen[std::string(to_string(e.sample.source_kind))];
      corpus.entries.push_back(std::move(e));
    } catch (const Error& e) {
      throw Error(ErrorCode::IoError, where + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, where + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::IoError, "corpus file is empty");
  for (const auto& [kind, n] : corpus.manifest.counts) {
    if (seen[kind] != n) throw Error(ErrorCode::IoError, "corpus holds " + std::to_string(seen[kind]) + " " + kind +
                                                             " samples but its manifest says " + std::to_string(n));
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& path, const CorpusFile& corpus) {
  detail::write_file_atomic(path, serialize_corpus(corpus));
}

CorpusFile read_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingStageInput, "corpus file not found: " + path.string());
  return parse_corpus(read_file(path));
}

// ---------------------------------------------------------------------------
// Building

namespace {

std::vector<std::filesystem::path> source_files(const SourceConfig& src) {
  if (!std::filesystem::is_directory(src.directory)) {
    throw Error(ErrorCode::MissingStageInput, "source directory not found: " + src.directory.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(src.directory)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = detail::to_lower_ascii(entry.path().extension().string());
    const bool wanted = src.kind == SourceKind::news ? (ext == ".html" || ext == ".htm") : ext == ".txt";
    if (wanted) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return fnv1a64(std::to_string(seed) + ":" + std::string(label));
}

}  // namespace

CorpusFile build_corpus(const CorpusConfig& config, Tagger& tagger, llm::Gateway* gateway) {
  if (config.sources.empty()) throw Error(ErrorCode::ConfigInvalid, "corpus build needs at least one source");
  if (config.quality && !gateway) throw Error(ErrorCode::ConfigInvalid, "the quality filter needs a gateway");
  if (config.bounds.min_words == 0 || config.bounds.min_words > config.bounds.max_words) {
    throw Error(ErrorCode::ConfigInvalid, "invalid passage length bounds");
  }

  CorpusFile corpus;
  std::map<std::string, std::size_t> rejected;
  for (const auto& src : config.sources) {
    const std::string kind(to_string(src.kind));
    std::vector<TextSample> candidates;
    std::unordered_set<std::string> seen_texts;
    for (const auto& file : source_files(src)) {
      RawDocument doc;
      try {
        const auto origin = (src.directory.filename() / file.filename()).generic_string();
        doc = load_document(file, src.kind, origin);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoParagraphs) throw;
        continue;
      }
      for (const auto& block : doc.blocks) {
        for (auto& passage : passages_from_block(block, config.bounds)) {
          if (!seen_texts.insert(passage).second) continue;
          candidates.push_back(TextSample{sample_id(src.kind, doc.origin, passage), passage, src.kind, doc.origin});
        }
      }
    }
    std::mt19937_64 order_rng(derive_seed(config.seed, kind));
    std::shuffle(candidates.begin(), candidates.end(), order_rng);

    std::vector<CorpusEntry> accepted;
    std::size_t next = 0;
    while (accepted.size() < src.count && next < candidates.size()) {
      std::vector<CorpusEntry> chunk;
      while (chunk.size() < src.count - accepted.size() && next < candidates.size()) {
        const TextSample& s = candidates[next++];
        if (!profanity_filter(s.text, config.profanity).pass) {
          ++rejected["profanity"];
          continue;
        }
        try {
          chunk.push_back(CorpusEntry{s, select_target_word(s, derive_seed(config.seed, s.id), tagger, config.stopwords)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoEligibleToken) throw;
          ++rejected["no_target"];
        }
      }
      if (config.quality && !chunk.empty()) {
        std::vector<std::string> texts;
        for (const auto& c : chunk) texts.push_back(c.sample.text);
        const auto verdicts = llm_quality_filter_many(texts, *config.quality, *gateway);
        std::vector<CorpusEntry> kept;
        for (std::size_t i = 0; i < chunk.size(); ++i) {
          if (verdicts[i].pass) {
            kept.push_back(std::move(chunk[i]));
          } else {
            ++rejected["quality:" + verdicts[i].reason];
          }
        }
        chunk = std::move(kept);
      }
      for (auto& c : chunk) accepted.push_back(std::move(c));
    }
    if (accepted.size() < src.count) {
      throw Error(ErrorCode::InsufficientCleanSamples,
                  kind + " sources yielded " + std::to_string(accepted.size()) + " clean samples of " +
                      std::to_string(src.count) + " requested (" + std::to_string(candidates.size()) + " candidates)");
    }
    corpus.manifest.counts[kind] += accepted.size();
    for (auto& e : accepted) corpus.entries.push_back(std::move(e));
  }

  std::mt19937_64 shuffle_rng(config.seed);
  std::shuffle(corpus.entries.begin(), corpus.entries.end(), shuffle_rng);

  corpus.manifest.seed = config.seed;
  nlohmann::json settings;
  settings["format_version"] = 1;
  settings["passage_words"] = {{"min", config.bounds.min_words}, {"max", config.bounds.max_words}};
  settings["stopwords"] = word_set_digest(config.stopwords);
  settings["profanity"] = word_set_digest(config.profanity);
  settings["quality_filter"] = config.quality ? nlohmann::json(config.quality->model) : nlohmann::json(nullptr);
  settings["tagger"] = tagger.version();
  settings["rejected"] = rejected;
  corpus.manifest.settings = settings;
  return corpus;
}

}  // namespace emojinize::corpus
