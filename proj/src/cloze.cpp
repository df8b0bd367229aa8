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

#include "emojinize/cloze.hpp"

#include <algorithm>

#include "emojinize/error.hpp"
#include "emojinize/utf8.hpp"
#include "strings.hpp"

namespace emojinize::eval {
namespace {

constexpr std::array<std::string_view, 6> kConditionNames{
    "baseline", "human_translation", "emojinize", "emojinize_multishot", "emojinize_batch", "emojinize_mwe"};

struct GuessDemo {
  std::string_view text;
  std::string_view answer;
};

// Rendered exactly like render_cloze output.
constexpr std::array<GuessDemo, 4> kGuessDemos{{
    {"The old ____ (hint: 🗼💡🌊) guided the ships safely past the rocks.", "lighthouse"},
    {"She poured the ____ into a tall glass and added some ice.", "lemonade"},
    {"After the long hike, the children ____ (hint: 😴🛏️) for ten hours.", "slept"},
    {"He ____ ____ ____ (hint: 🧊🔨) with a joke at the start of the meeting.", "broke the ice"},
}};

constexpr std::string_view kGuessSystem =
    "You are taking a cloze test. In each passage, one or more words are hidden and replaced by ____, "
    "one per hidden word. Sometimes emoji follow the gap as a hint. Reply with your guess for the "
    "hidden word or words only, in plain text, without any explanation.";

struct MatchDemo {
  std::string_view first;
  std::string_view second;
  std::string_view verdict;
};

constexpr std::array<MatchDemo, 3> kMatchDemos{{
    {"automobile", "car", "yes"},
    {"recieve", "receive", "yes"},
    {"happy", "table", "no"},
}};

constexpr std::string_view kMatchSystem =
    "Decide whether two given words or phrases have the same meaning. Count synonyms as the same "
    "meaning and ignore typos and small spelling mistakes. Answer with yes or no only.";

std::string match_prompt(std::string_view first, std::string_view second) {
  return "First: " + std::string(first) + "\nSecond: " + std::string(second);
}

}  // namespace

std::string_view to_string(Condition c) noexcept { return kConditionNames[static_cast<std::size_t>(c)]; }

Condition parse_condition(std::string_view name) {
  for (std::size_t i = 0; i < kConditionNames.size(); ++i) {
    if (kConditionNames[i] == name) return static_cast<Condition>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown condition \"" + std::string(name) + "\"");
}

const std::array<Condition, 6>& all_conditions() noexcept {
  static constexpr std::array<Condition, 6> kAll{Condition::baseline,           Condition::human_translation,
                                                 Condition::emojinize,          Condition::emojinize_multishot,
                                                 Condition::emojinize_batch,    Condition::emojinize_mwe};
  return kAll;
}

std::string_view to_string(ParticipantKind k) noexcept { return k == ParticipantKind::human ? "human" : "llm"; }

ParticipantKind parse_participant_kind(std::string_view name) {
  if (name == "human") return ParticipantKind::human;
  if (name == "llm") return ParticipantKind::llm;
  throw Error(ErrorCode::InvalidArgument, "unknown participant kind \"" + std::string(name) + "\"");
}

std::string_view to_string(ScoredBy s) noexcept { return s == ScoredBy::exact ? "exact" : "llm"; }

ScoredBy parse_scored_by(std::string_view name) {
  if (name == "exact") return ScoredBy::exact;
  if (name == "llm") return ScoredBy::llm;
  throw Error(ErrorCode::InvalidArgument, "unknown scorer \"" + std::string(name) + "\"");
}

void ClozeItem::validate() const {
  const std::size_t n = utf8::length(text);
  if (hidden.start >= hidden.end || hidden.end > n) {
    throw Error(ErrorCode::InvalidArgument, "hidden span out of range in item " + sample_id);
  }
  if (utf8::substr(text, hidden.start, hidden.end) != hidden_surface) {
    throw Error(ErrorCode::InvalidArgument, "hidden span does not match its surface in item " + sample_id);
  }
  if (hint.has_value() == (condition == Condition::baseline)) {
    throw Error(ErrorCode::InvalidArgument, "item " + sample_id + ": a hint is required exactly when the condition is not baseline");
  }
}

std::string render_cloze(const ClozeItem& item) {
  const std::size_t words = std::max<std::size_t>(1, detail::split_whitespace(item.hidden_surface).size());
  std::string gap;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) gap += ' ';
    gap += kBlank;
  }
  if (item.hint) gap += " (hint: " + item.hint->text() + ")";
  const auto start = utf8::byte_offset(item.text, item.hidden.start);
  const auto end = utf8::byte_offset(item.text, item.hidden.end);
  return item.text.substr(0, start) + gap + item.text.substr(end);
}

llm::ChatRequest build_guess_request(const ClozeItem& item, const GuesserConfig& config, int sample_index) {
  llm::ChatRequest req;
  req.model = config.model;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.sample_index = sample_index;
  req.messages.push_back(llm::system_message(std::string(kGuessSystem)));
  const std::string hidden = detail::to_lower_ascii(detail::trim(item.hidden_surface));
  for (const auto& demo : kGuessDemos) {
    const std::string shown = detail::to_lower_ascii(demo.text) + "\n" + detail::to_lower_ascii(demo.answer);
    if (!hidden.empty() && shown.find(hidden) != std::string::npos) continue;
    req.messages.push_back(llm::user_message(std::string(demo.text)));
    req.messages.push_back(llm::assistant_message(std::string(demo.answer)));
  }
  req.messages.push_back(llm::user_message(render_cloze(item)));
  return req;
}

std::string parse_guess(std::string_view reply) {
  reply = detail::trim(reply);
  const auto nl = reply.find('\n');
  return std::string(detail::trim(reply.substr(0, nl)));
}

std::string llm_guess(const ClozeItem& item, int sample_index, const GuesserConfig& config, llm::Gateway& gateway) {
  return parse_guess(gateway.complete(build_guess_request(item, config, sample_index)).content);
}

bool exact_match(std::string_view guess, std::string_view hidden) {
  const auto g = detail::trim(guess);
  return !g.empty() && detail::to_lower_ascii(g) == detail::to_lower_ascii(detail::trim(hidden));
}

llm::ChatRequest build_match_request(std::string_view guess, std::string_view hidden, const MatcherConfig& config,
                                     int sample_index) {
  llm::ChatRequest req;
  req.model = config.model;
  req.temperature = 0.0;
  req.max_tokens = 4;
  req.sample_index = sample_index;
  req.messages.push_back(llm::system_message(std::string(kMatchSystem)));
  for (const auto& demo : kMatchDemos) {
    req.messages.push_back(llm::user_message(match_prompt(demo.first, demo.second)));
    req.messages.push_back(llm::assistant_message(std::string(demo.verdict)));
  }
  req.messages.push_back(llm::user_message(match_prompt(detail::trim(guess), detail::trim(hidden))));
  return req;
}

std::optional<bool> parse_verdict(std::string_view reply) {
  const std::string r = detail::to_lower_ascii(detail::trim(reply));
  std::size_t n = 0;
  while (n < r.size() && std::isalpha(static_cast<unsigned char>(r[n]))) ++n;
  const std::string_view word(r.data(), n);
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

MatchOutcome match_guess(std::string_view guess, std::string_view hidden, const MatcherConfig& config,
                         llm::Gateway& gateway) {
  const std::pair<std::string, std::string> pair{std::string(guess), std::string(hidden)};
  auto outcome = match_many(std::span(&pair, 1), config, gateway).front();
  if (outcome.error) std::rethrow_exception(outcome.error);
  return outcome;
}

std::vector<MatchOutcome> match_many(std::span<const std::pair<std::string, std::string>> pairs,
                                     const MatcherConfig& config, llm::Gateway& gateway) {
  std::vector<MatchOutcome> out(pairs.size());
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [guess, hidden] = pairs[i];
    if (detail::trim(guess).empty()) continue;
    if (exact_match(guess, hidden)) {
      out[i].matched = true;
      continue;
    }
    out[i].scored_by = ScoredBy::llm;
    open.push_back(i);
  }
  for (int round = 0; round < std::max(1, config.max_resamples) && !open.empty(); ++round) {
    std::vector<llm::ChatRequest> reqs;
    reqs.reserve(open.size());
    for (auto i : open) reqs.push_back(build_match_request(pairs[i].first, pairs[i].second, config, round));
    auto replies = gateway.complete_many(reqs);
    std::vector<std::size_t> still_open;
    for (std::size_t k = 0; k < open.size(); ++k) {
      if (!replies[k].ok()) {
        out[open[k]].error = replies[k].error();
        continue;
      }
      const auto verdict = parse_verdict(replies[k].value().content);
      if (verdict) {
        out[open[k]].matched = *verdict;
      } else {
        still_open.push_back(open[k]);
      }
    }
    open = std::move(still_open);
  }
  for (auto i : open) out[i].flagged = true;
  return out;
}

}  // namespace emojinize::eval
