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

#include "emojinize/translator.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

#include "emojinize/error.hpp"
#include "emojinize/utf8.hpp"
#include "resources.hpp"
#include "strings.hpp"

namespace emojinize::translate {
namespace {

using text::EmojiSequence;

bool is_rejection(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedJson:
    case ErrorCode::MissingSpan:
    case ErrorCode::NonEmojiContent:
    case ErrorCode::EmptySequence:
    case ErrorCode::NoUnitsFound:
      return true;
    default:
      return false;
  }
}

template <class T>
struct Attempt {
  std::optional<T> value;
  std::string reply;
  int resamples_used = 0;
  std::exception_ptr error;
};

// Runs up to `max_attempts` rounds; round r re-requests every still-rejected
// item with sample_index r. Gateway failures are not retried here.
template <class T>
std::vector<Attempt<T>> resample_rounds(std::size_t n, int max_attempts,
                                        const std::function<llm::ChatRequest(std::size_t, int)>& make,
                                        const std::function<T(const std::string&, std::size_t)>& parse,
                                        llm::Gateway& gateway) {
  std::vector<Attempt<T>> out(n);
  std::vector<std::size_t> open(n);
  for (std::size_t i = 0; i < n; ++i) open[i] = i;
  std::vector<std::string> last_reason(n);
  std::vector<ErrorCode> last_code(n, ErrorCode::MalformedJson);

  for (int round = 0; round < max_attempts && !open.empty(); ++round) {
    std::vector<llm::ChatRequest> reqs;
    reqs.reserve(open.size());
    for (auto i : open) reqs.push_back(make(i, round));
    auto replies = gateway.complete_many(reqs);
    std::vector<std::size_t> still_open;
    for (std::size_t k = 0; k < open.size(); ++k) {
      const std::size_t i = open[k];
      if (!replies[k].ok()) {
        out[i].error = replies[k].error();
        continue;
      }
      const std::string& reply = replies[k].value().content;
      try {
        out[i].value = parse(reply, i);
        out[i].reply = reply;
        out[i].resamples_used = round;
      } catch (const Error& e) {
        if (!is_rejection(e.code())) throw;
        last_reason[i] = e.what();
        last_code[i] = e.code();
        still_open.push_back(i);
      }
    }
    open = std::move(still_open);
  }
  for (auto i : open) {
    const ErrorCode code = last_code[i] == ErrorCode::NoUnitsFound ? ErrorCode::NoUnitsFound
                                                                   : ErrorCode::ResampleBudgetExhausted;
    out[i].error = std::make_exception_ptr(
        Error(code, "all " + std::to_string(max_attempts) + " attempts were rejected; last: " + last_reason[i]));
  }
  return out;
}

std::string_view strip_code_fence(std::string_view s) {
  s = detail::trim(s);
  if (s.substr(0, 3) != "```") return s;
  const auto first_nl = s.find('\n');
  if (first_nl == std::string_view::npos) return s;
  s.remove_prefix(first_nl + 1);
  s = detail::trim(s);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s.remove_suffix(3);
  return detail::trim(s);
}

std::string normalize_passage(std::string_view s) {
  s = detail::trim(s);
  while (!s.empty() && (s.front() == '<' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '>' || s.back() == '"')) s.remove_suffix(1);
  return detail::to_lower_ascii(detail::collapse_whitespace(s));
}

std::string system_prompt(const TranslatorConfig& config) {
  return "You translate " + config.language +
         " text into emoji. Passages to translate are marked with angle brackets, like <this>. Reply with a "
         "JSON object only. Under \"text\", first repeat the marked passage exactly as written; under "
         "\"emoji\", give an emoji translation of that passage in its context. When several passages are "
         "marked, both values are arrays with one entry per passage, in order. Translations contain emoji "
         "only, no letters or words.";
}

std::string demo_reply(const std::vector<std::string>& passages, const std::vector<std::string>& emoji, bool arrays) {
  nlohmann::ordered_json j;
  if (arrays) {
    j["text"] = passages;
    j["emoji"] = emoji;
  } else {
    j["text"] = passages.front();
    j["emoji"] = emoji.front();
  }
  return j.dump();
}

std::vector<std::string> string_entries(const nlohmann::json& v, std::string_view key) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw Error(ErrorCode::MalformedJson, "\"" + std::string(key) + "\" entries must be strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  throw Error(ErrorCode::MalformedJson, "\"" + std::string(key) + "\" must be a string or an array of strings");
}

bool word_boundary_at(const std::vector<char32_t>& cps, std::size_t start, std::size_t end) {
  if (start > 0 && detail::is_word_cp(cps[start - 1]) && detail::is_word_cp(cps[start])) return false;
  if (end < cps.size() && detail::is_word_cp(cps[end]) && detail::is_word_cp(cps[end - 1])) return false;
  return true;
}

std::vector<double> utilities(const std::vector<EmojiSequence>& candidates, const eval::ClozeItem& item, int guesses,
                              const TranslatorConfig& config, llm::Gateway& gateway) {
  if (guesses < 1) throw Error(ErrorCode::InvalidArgument, "backtranslation needs at least one guess");
  eval::GuesserConfig guesser = config.guesser;
  guesser.temperature = config.multishot.guess_temperature;
  std::vector<llm::ChatRequest> reqs;
  for (const auto& c : candidates) {
    eval::ClozeItem hinted = item;
    hinted.condition = eval::Condition::emojinize_multishot;
    hinted.hint = c;
    for (int g = 0; g < guesses; ++g) reqs.push_back(eval::build_guess_request(hinted, guesser, g));
  }
  auto replies = gateway.complete_many(reqs);
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(replies.size());
  for (const auto& r : replies) pairs.emplace_back(eval::parse_guess(r.value().content), item.hidden_surface);
  auto outcomes = eval::match_many(pairs, config.matcher, gateway);
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
  }
  std::vector<double> out;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::size_t hits = 0;
    for (int g = 0; g < guesses; ++g) hits += outcomes[c * guesses + g].matched ? 1 : 0;
    out.push_back(static_cast<double>(hits) / guesses);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// MarkedText

void MarkedText::validate() const {
  if (spans.empty()) throw Error(ErrorCode::InvalidArgument, "marked text needs at least one span");
  const auto cps = utf8::decode(text).code_points;
  std::size_t prev_end = 0;
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > cps.size()) {
      throw Error(ErrorCode::InvalidArgument, "span [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") out of range");
    }
    if (s.start < prev_end) throw Error(ErrorCode::InvalidArgument, "spans must be sorted and non-overlapping");
    if (std::none_of(cps.begin() + s.start, cps.begin() + s.end, detail::is_word_cp)) {
      throw Error(ErrorCode::InvalidArgument, "span [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") covers no word");
    }
    prev_end = s.end;
  }
}

std::vector<std::string> MarkedText::passages() const {
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(utf8::substr(text, s.start, s.end));
  return out;
}

std::string MarkedText::render() const {
  std::string out;
  std::size_t prev = 0;
  for (const auto& s : spans) {
    const auto b = utf8::byte_offset(text, s.start);
    const auto e = utf8::byte_offset(text, s.end);
    out += text.substr(prev, b - prev);
    out += '<';
    out += text.substr(b, e - b);
    out += '>';
    prev = e;
  }
  out += text.substr(prev);
  return out;
}

MarkedText MarkedText::only(std::size_t span_index) const { return MarkedText{text, {spans.at(span_index)}}; }

const TranslationResult& TranslationOutcome::value() const {
  if (!result) std::rethrow_exception(error);
  return *result;
}

// ---------------------------------------------------------------------------
// Demonstrations and config

std::vector<Demonstration> parse_demonstrations(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ConfigInvalid, "demonstrations must be a non-empty list");
  std::vector<Demonstration> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      Demonstration d;
      d.marked.text = e.at("text").get<std::string>();
      d.marked.spans = e.at("spans").get<std::vector<Span>>();
      d.marked.validate();
      const auto translations = e.at("translations").get<std::vector<std::string>>();
      if (translations.size() != d.marked.spans.size()) {
        throw Error(ErrorCode::ConfigInvalid, "needs one translation per span");
      }
      for (const auto& t : translations) d.translations.push_back(EmojiSequence::parse(t));
      out.push_back(std::move(d));
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::ConfigInvalid, "demonstration " + std::to_string(i) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<Demonstration> load_demonstrations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open demonstrations file " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "demonstrations file is not valid JSON: " + path.string());
  return parse_demonstrations(j);
}

const std::vector<Demonstration>& default_demonstrations() {
  static const std::vector<Demonstration> demos =
      parse_demonstrations(nlohmann::json::parse(resources::default_demonstrations));
  return demos;
}

void TranslatorConfig::validate() const {
  if (model.empty()) throw Error(ErrorCode::ConfigInvalid, "translator model is not set");
  if (language.empty()) throw Error(ErrorCode::ConfigInvalid, "translator language is not set");
  if (max_resamples < 1) throw Error(ErrorCode::ConfigInvalid, "max_resamples must be at least 1");
  if (temperature < 0.0 || temperature > 2.0) throw Error(ErrorCode::ConfigInvalid, "temperature must be in [0, 2]");
  if (demonstrations.empty()) throw Error(ErrorCode::ConfigInvalid, "at least one demonstration is required");
  if (multishot.candidates < 1 || multishot.guesses < 1) {
    throw Error(ErrorCode::ConfigInvalid, "multi-shot needs at least one candidate and one guess");
  }
}

// ---------------------------------------------------------------------------
// Prompting

std::vector<llm::ChatMessage> build_translation_prompt(const MarkedText& marked, const TranslatorConfig& config) {
  const bool arrays = marked.spans.size() > 1;
  std::vector<llm::ChatMessage> msgs;
  msgs.push_back(llm::system_message(system_prompt(config)));
  for (const auto& demo : config.demonstrations) {
    const MarkedText shown = arrays ? demo.marked : demo.marked.only(0);
    std::vector<std::string> emoji;
    for (std::size_t i = 0; i < shown.spans.size(); ++i) emoji.push_back(demo.translations[i].text());
    msgs.push_back(llm::user_message(shown.render()));
    msgs.push_back(llm::assistant_message(demo_reply(shown.passages(), emoji, arrays)));
  }
  msgs.push_back(llm::user_message(marked.render()));
  return msgs;
}

llm::ChatRequest build_translation_request(const MarkedText& marked, const TranslatorConfig& config, int sample_index,
                                           double temperature) {
  llm::ChatRequest req;
  req.model = config.model;
  req.messages = build_translation_prompt(marked, config);
  req.temperature = temperature;
  req.max_tokens = config.max_tokens;
  req.sample_index = sample_index;
  return req;
}

std::vector<EmojiSequence> parse_translation_reply(std::string_view reply, std::span<const std::string> expected) {
  const auto body = strip_code_fence(reply);
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedJson, "reply is not a JSON object");
  if (!j.contains("text") || !j.contains("emoji")) {
    throw Error(ErrorCode::MissingSpan, "reply lacks a \"text\" or \"emoji\" entry");
  }
  const auto texts = string_entries(j["text"], "text");
  const auto emoji = string_entries(j["emoji"], "emoji");
  if (texts.size() != expected.size() || emoji.size() != expected.size()) {
    throw Error(ErrorCode::MissingSpan, "reply has " + std::to_string(std::min(texts.size(), emoji.size())) +
                                            " entries for " + std::to_string(expected.size()) + " passages");
  }
  std::vector<EmojiSequence> out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (normalize_passage(texts[i]) != normalize_passage(expected[i])) {
      throw Error(ErrorCode::MissingSpan, "passage \"" + expected[i] + "\" is not repeated in the reply");
    }
    out.push_back(EmojiSequence::parse(emoji[i]));
  }
  return out;
}

std::vector<TranslationOutcome> translate_many(std::span<const MarkedText> inputs, const TranslatorConfig& config,
                                               llm::Gateway& gateway) {
  config.validate();
  std::vector<std::vector<std::string>> passages;
  for (const auto& m : inputs) {
    m.validate();
    passages.push_back(m.passages());
  }
  auto attempts = resample_rounds<std::vector<EmojiSequence>>(
      inputs.size(), config.max_resamples,
      [&](std::size_t i, int round) { return build_translation_request(inputs[i], config, round, config.temperature); },
      [&](const std::string& reply, std::size_t i) { return parse_translation_reply(reply, passages[i]); }, gateway);
  std::vector<TranslationOutcome> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& a = attempts[i];
    if (a.value) {
      out[i].result = TranslationResult{std::move(*a.value), std::move(a.reply), a.resamples_used};
    } else {
      out[i].error = a.error;
    }
  }
  return out;
}

TranslationResult translate(const MarkedText& marked, const TranslatorConfig& config, llm::Gateway& gateway) {
  marked.validate();
  std::vector<MarkedText> singles;
  for (std::size_t i = 0; i < marked.spans.size(); ++i) singles.push_back(marked.only(i));
  auto outcomes = translate_many(singles, config, gateway);
  TranslationResult result;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& r = outcomes[i].value();
    result.sequences.push_back(r.sequences.front());
    if (i) result.raw_reply += '\n';
    result.raw_reply += r.raw_reply;
    result.resamples_used = std::max(result.resamples_used, r.resamples_used);
  }
  return result;
}

TranslationResult translate_batch(const MarkedText& marked, const TranslatorConfig& config, llm::Gateway& gateway) {
  return translate_many(std::span(&marked, 1), config, gateway).front().value();
}

// ---------------------------------------------------------------------------
// Units

namespace {

constexpr std::string_view kUnitsDemoText =
    "The new prime minister promised to cut red tape for small businesses.";
constexpr std::string_view kUnitsDemoReply =
    R"({"units":["new","prime minister","promised","cut red tape","small businesses"]})";

}  // namespace

llm::ChatRequest build_units_request(std::string_view text, const TranslatorConfig& config, int sample_index) {
  llm::ChatRequest req;
  req.model = config.model;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.sample_index = sample_index;
  req.messages.push_back(llm::system_message(
      "Find all possible translation units in the " + config.language +
      " text: content words, and multi-word expressions such as idioms, compounds and names whose words "
      "carry one meaning together. Reply with a JSON object {\"units\": [...]} listing every unit exactly "
      "as it is written in the text, in order of appearance."));
  req.messages.push_back(llm::user_message(std::string(kUnitsDemoText)));
  req.messages.push_back(llm::assistant_message(std::string(kUnitsDemoReply)));
  req.messages.push_back(llm::user_message(std::string(text)));
  return req;
}

std::vector<Span> parse_units_reply(std::string_view reply, std::string_view text) {
  auto j = nlohmann::json::parse(strip_code_fence(reply), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("units") || !j["units"].is_array()) {
    throw Error(ErrorCode::MalformedJson, "reply is not a {\"units\": [...]} object");
  }
  const auto decoded = utf8::decode(text);
  const auto& offsets = decoded.byte_offsets;
  auto cp_index = [&](std::size_t byte) {
    return static_cast<std::size_t>(std::lower_bound(offsets.begin(), offsets.end(), byte) - offsets.begin());
  };
  std::vector<Span> accepted;
  for (const auto& u : j["units"]) {
    if (!u.is_string()) continue;
    const std::string unit(detail::trim(u.get<std::string>()));
    if (unit.empty()) continue;
    for (std::size_t pos = text.find(unit); pos != std::string_view::npos; pos = text.find(unit, pos + 1)) {
      if (offsets[cp_index(pos)] != pos) continue;
      const Span s{cp_index(pos), cp_index(pos + unit.size())};
      if (!word_boundary_at(decoded.code_points, s.start, s.end)) continue;
      if (std::any_of(accepted.begin(), accepted.end(), [&](const Span& a) { return a.overlaps(s); })) continue;
      accepted.push_back(s);
      break;
    }
  }
  return accepted;
}

std::vector<UnitsOutcome> identify_units_many(std::span<const std::string> texts, const TranslatorConfig& config,
                                             llm::Gateway& gateway) {
  for (const auto& t : texts) {
    if (detail::trim(t).empty()) throw Error(ErrorCode::InvalidArgument, "cannot identify units in empty text");
  }
  auto attempts = resample_rounds<std::vector<Span>>(
      texts.size(), config.max_resamples,
      [&](std::size_t i, int round) { return build_units_request(texts[i], config, round); },
      [&](const std::string& reply, std::size_t i) {
        auto spans = parse_units_reply(reply, texts[i]);
        if (spans.empty()) throw Error(ErrorCode::NoUnitsFound, "no proposed unit occurs in the text");
        return spans;
      },
      gateway);
  std::vector<UnitsOutcome> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out[i].units = std::move(attempts[i].value);
    out[i].error = attempts[i].error;
  }
  return out;
}

std::vector<Span> identify_units(std::string_view text, const TranslatorConfig& config, llm::Gateway& gateway) {
  const std::string t(text);
  auto out = identify_units_many(std::span(&t, 1), config, gateway);
  if (!out[0].units) std::rethrow_exception(out[0].error);
  return std::move(*out[0].units);
}

Span choose_unit(std::string_view text, std::span<const Span> units, const Span& target) {
  if (units.empty()) throw Error(ErrorCode::NoUnitsFound, "no units to choose from");
  for (const auto& u : units) {
    if (u.contains(target)) return u;
  }
  for (const auto& u : units) {
    if (detail::split_whitespace(utf8::substr(text, u.start, u.end)).size() > 1) return u;
  }
  return units.front();
}

// ---------------------------------------------------------------------------
// Backtranslation

double backtranslation_utility(const EmojiSequence& candidate, const eval::ClozeItem& item, int guesses,
                               const TranslatorConfig& config, llm::Gateway& gateway) {
  return utilities({candidate}, item, guesses, config, gateway).front();
}

MultishotResult translate_multishot(const MarkedText& marked, const eval::ClozeItem& item,
                                    const TranslatorConfig& config, llm::Gateway& gateway) {
  config.validate();
  marked.validate();
  if (marked.spans.size() != 1) throw Error(ErrorCode::InvalidArgument, "multi-shot translation takes a single span");
  const auto passages = marked.passages();

  std::vector<llm::ChatRequest> reqs;
  for (int k = 0; k < config.multishot.candidates; ++k) {
    reqs.push_back(build_translation_request(marked, config, k, config.multishot.candidate_temperature));
  }
  auto replies = gateway.complete_many(reqs);

  MultishotResult result;
  std::vector<EmojiSequence> sequences;
  std::string last_reason;
  for (int k = 0; k < config.multishot.candidates; ++k) {
    const std::string& reply = replies[k].value().content;
    try {
      auto seq = parse_translation_reply(reply, passages).front();
      if (std::find(sequences.begin(), sequences.end(), seq) != sequences.end()) continue;
      sequences.push_back(seq);
      result.candidates.push_back(Candidate{std::move(seq), reply, k, 0.0});
    } catch (const Error& e) {
      if (!is_rejection(e.code())) throw;
      last_reason = e.what();
    }
  }
  if (sequences.empty()) {
    throw Error(ErrorCode::ResampleBudgetExhausted, "all " + std::to_string(config.multishot.candidates) +
                                                        " candidates were rejected; last: " + last_reason);
  }

  const auto scores = utilities(sequences, item, config.multishot.guesses, config, gateway);
  std::size_t best = 0;
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    result.candidates[c].utility = scores[c];
    const auto& a = result.candidates[c];
    const auto& b = result.candidates[best];
    if (a.utility > b.utility || (a.utility == b.utility && a.sequence.size() < b.sequence.size())) best = c;
  }
  const auto& chosen = result.candidates[best];
  result.translation = TranslationResult{{chosen.sequence}, chosen.raw_reply, 0};
  result.utility = chosen.utility;
  return result;
}

}  // namespace emojinize::translate
