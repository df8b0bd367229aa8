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


#include "emojinize/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>
#include <unordered_map>

#include "emojinize/error.hpp"
#include "fileio.hpp"
#include "strings.hpp"

namespace emojinize::eval {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string record_key(const GuessRecord& r) {
  return r.item_id + '\x1f' + std::string(to_string(r.condition)) + '\x1f' + std::string(to_string(r.participant_kind)) +
         '\x1f' + r.participant_id;
}

RecordError to_record_error(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    return {std::string(to_string(e.code())), e.message()};
  } catch (const std::exception& e) {
    return {"InternalError", e.what()};
  }
}

GuessRecord errored_record(const std::string& item_id, Condition condition, const std::string& participant,
                           RecordError error) {
  GuessRecord r;
  r.item_id = item_id;
  r.condition = condition;
  r.participant_kind = ParticipantKind::llm;
  r.participant_id = participant;
  r.error = std::move(error);
  return r;
}

void apply_outcome(GuessRecord& r, const MatchOutcome& outcome) {
  if (outcome.error) {
    r.error = to_record_error(outcome.error);
    return;
  }
  r.matched = outcome.matched;
  r.scored_by = outcome.scored_by;
  r.flagged = outcome.flagged;
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

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

void GuessRecord::validate() const {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "record for item \"" + item_id + "\": " + why);
  };
  if (item_id.empty()) fail("empty item_id");
  if (participant_id.empty()) fail("empty participant_id");
  if (matched.has_value() != scored_by.has_value()) fail("matched and scored_by must be set together");
  if (error) {
    if (matched) fail("errored record cannot be scored");
    return;
  }
  if (blank && !guess.empty()) fail("blank record with a guess");
  if (!blank && guess.empty()) fail("empty guess not marked blank");
  if (flagged && (!matched || *matched)) fail("flagged records are scored unmatched");
}

ordered_json to_json(const GuessRecord& r) {
  ordered_json j;
  j["item_id"] = r.item_id;
  j["condition"] = to_string(r.condition);
  j["participant_kind"] = to_string(r.participant_kind);
  j["participant_id"] = r.participant_id;
  j["guess"] = r.guess;
  j["matched"] = r.matched ? ordered_json(*r.matched) : ordered_json(nullptr);
  j["scored_by"] = r.scored_by ? ordered_json(to_string(*r.scored_by)) : ordered_json(nullptr);
  if (r.blank) j["blank"] = true;
  if (r.flagged) j["flagged"] = true;
  if (r.error) j["error"] = ordered_json{{"code", r.error->code}, {"message", r.error->message}};
  return j;
}

GuessRecord guess_record_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "record is not an object");
  GuessRecord r;
  try {
    r.item_id = j.at("item_id").get<std::string>();
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.participant_kind = parse_participant_kind(j.at("participant_kind").get<std::string>());
    r.participant_id = j.at("participant_id").get<std::string>();
    r.guess = j.value("guess", std::string());
    if (auto it = j.find("matched"); it != j.end() && !it->is_null()) r.matched = it->get<bool>();
    if (auto it = j.find("scored_by"); it != j.end() && !it->is_null())
      r.scored_by = parse_scored_by(it->get<std::string>());
    r.blank = j.value("blank", false);
    r.flagged = j.value("flagged", false);
    if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
      r.error = RecordError{it->at("code").get<std::string>(), it->value("message", std::string())};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad record: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<GuessRecord> parse_records(std::string_view jsonl) {
  std::vector<GuessRecord> out;
  const auto lines = split_lines(jsonl);
  const bool unterminated = !jsonl.empty() && jsonl.back() != '\n';
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    try {
      out.push_back(guess_record_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (unterminated && i + 1 == lines.size()) break;
      throw Error(ErrorCode::IoError, "records line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<GuessRecord> read_records(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse_records(detail::read_file(path));
}

std::string serialize_records(std::span<const GuessRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void append_records(const std::filesystem::path& path, std::span<const GuessRecord> records) {
  if (records.empty()) return;
  // A previous interrupted append may have left a torn line; start fresh.
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    const auto existing = detail::read_file(path);
    if (existing.back() != '\n') {
      const auto cut = existing.rfind('\n');
      detail::write_file_atomic(path, cut == std::string::npos ? std::string() : existing.substr(0, cut + 1));
    }
  }
  detail::append_file(path, serialize_records(records));
}

std::vector<GuessRecord> latest_records(std::span<const GuessRecord> records) {
  std::vector<GuessRecord> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, inserted] = slot.emplace(record_key(r), out.size());
    if (inserted) {
      out.push_back(r);
    } else {
      out[it->second] = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hints

HintMap parse_human_translations(std::string_view jsonl, const corpus::CorpusFile& corpus) {
  HintMap out;
  const auto lines = split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::string where = "human translations line " + std::to_string(i + 1) + ": ";
    std::string id;
    std::string emoji;
    try {
      const auto j = json::parse(lines[i]);
      id = j.at("sample_id").get<std::string>();
      emoji = j.at("emoji").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::IoError, where + e.what());
    }
    const auto* entry = corpus.find(id);
    if (!entry) throw Error(ErrorCode::InvalidArgument, where + "unknown sample_id \"" + id + "\"");
    try {
      auto seq = text::parse_emoji_sequence(emoji);
      out.try_emplace(id, Hint{std::move(seq), entry->target.span, entry->target.surface});
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return out;
}

HintMap load_human_translations(const std::filesystem::path& path, const corpus::CorpusFile& corpus) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingStageInput, "human translations not found: " + path.string());
  }
  return parse_human_translations(detail::read_file(path), corpus);
}

ClozeItem make_cloze_item(const corpus::CorpusEntry& entry, Condition condition, const Hint* hint) {
  ClozeItem item;
  item.sample_id = entry.sample.id;
  item.text = entry.sample.text;
  item.condition = condition;
  if (condition == Condition::baseline) {
    item.hidden = entry.target.span;
    item.hidden_surface = entry.target.surface;
  } else {
    if (!hint) {
      throw Error(ErrorCode::MissingTranslation,
                  "no " + std::string(to_string(condition)) + " translation for " + entry.sample.id);
    }
    item.hidden = hint->hidden;
    item.hidden_surface = hint->hidden_surface;
    item.hint = hint->emoji;
  }
  item.validate();
  return item;
}

// ---------------------------------------------------------------------------
// Running a condition

std::vector<GuessRecord> run_condition(const corpus::CorpusFile& corpus, Condition condition, const HintMap* hints,
                                       const RunOptions& options, llm::Gateway& gateway, RunSummary* summary) {
  if (options.chunk_size == 0) throw Error(ErrorCode::InvalidArgument, "chunk_size must be positive");
  const std::string participant = options.guesser.model;
  RunSummary local;

  std::unordered_map<std::string, GuessRecord> done;
  if (!options.records_path.empty()) {
    for (auto& r : latest_records(read_records(options.records_path))) {
      if (r.condition != condition || r.participant_kind != ParticipantKind::llm || r.participant_id != participant)
        continue;
      if (r.errored()) continue;
      done.insert_or_assign(r.item_id, std::move(r));
    }
  }

  std::vector<GuessRecord> result(corpus.entries.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    if (auto it = done.find(corpus.entries[i].sample.id); it != done.end()) {
      result[i] = it->second;
      ++local.reused;
    } else {
      pending.push_back(i);
    }
  }

  for (std::size_t begin = 0; begin < pending.size(); begin += options.chunk_size) {
    const std::size_t end = std::min(pending.size(), begin + options.chunk_size);
    std::vector<std::size_t> asked;
    std::vector<ClozeItem> items;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& entry = corpus.entries[pending[k]];
      const Hint* hint = nullptr;
      if (hints) {
        if (auto it = hints->find(entry.sample.id); it != hints->end()) hint = &it->second;
      }
      try {
        items.push_back(make_cloze_item(entry, condition, hint));
        asked.push_back(pending[k]);
      } catch (...) {
        result[pending[k]] = errored_record(entry.sample.id, condition, participant, to_record_error(std::current_exception()));
      }
    }

    std::vector<llm::ChatRequest> requests;
    requests.reserve(items.size());
    for (const auto& item : items) requests.push_back(build_guess_request(item, options.guesser, 0));
    const auto replies = gateway.complete_many(requests);

    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::size_t> pair_slot;
    for (std::size_t k = 0; k < items.size(); ++k) {
      const std::size_t slot = asked[k];
      if (!replies[k].ok()) {
        result[slot] = errored_record(items[k].sample_id, condition, participant, to_record_error(replies[k].error()));
        continue;
      }
      GuessRecord r;
      r.item_id = items[k].sample_id;
      r.condition = condition;
      r.participant_kind = ParticipantKind::llm;
      r.participant_id = participant;
      r.guess = parse_guess(replies[k].value().content);
      r.blank = r.guess.empty();
      result[slot] = std::move(r);
      pairs.emplace_back(result[slot].guess, items[k].hidden_surface);
      pair_slot.push_back(slot);
    }
    const auto outcomes = match_many(pairs, options.matcher, gateway);
    for (std::size_t k = 0; k < outcomes.size(); ++k) apply_outcome(result[pair_slot[k]], outcomes[k]);

    std::vector<GuessRecord> fresh;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& r = result[pending[k]];
      if (r.errored()) {
        ++local.errored;
      } else {
        ++local.scored;
      }
      fresh.push_back(r);
    }
    if (!options.records_path.empty()) append_records(options.records_path, fresh);
  }

  if (summary) *summary = local;
  return result;
}

void score_records(std::span<GuessRecord> records, const HiddenLookup& hidden, const MatcherConfig& matcher,
                   llm::Gateway& gateway) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (r.scored() || r.errored()) continue;
    const auto truth = hidden(r);
    if (!truth) {
      r.error = RecordError{"InvalidArgument", "unknown item " + r.item_id};
      continue;
    }
    pairs.emplace_back(r.guess, *truth);
    slots.push_back(i);
  }
  const auto outcomes = match_many(pairs, matcher, gateway);
  for (std::size_t k = 0; k < outcomes.size(); ++k) apply_outcome(records[slots[k]], outcomes[k]);
}

// ---------------------------------------------------------------------------
// Report

Report build_report(const ReportInputs& inputs) {
  Report report;
  const auto latest = latest_records(inputs.records);

  std::map<std::pair<Condition, ParticipantKind>, ConditionAccuracy> groups;
  // Per condition and item: first scored outcome of each participant kind.
  std::map<Condition, std::map<std::string, std::pair<std::optional<bool>, std::optional<bool>>>> paired;
  for (const auto& r : latest) {
    auto& g = groups[{r.condition, r.participant_kind}];
    g.condition = r.condition;
    g.participant_kind = r.participant_kind;
    if (r.errored()) {
      ++g.errored;
      continue;
    }
    if (!r.scored()) continue;
    ++g.stat.trials;
    if (*r.matched) ++g.stat.successes;
    if (r.flagged) ++g.flagged;
    auto& p = paired[r.condition][r.item_id];
    auto& side = r.participant_kind == ParticipantKind::human ? p.first : p.second;
    if (!side) side = *r.matched;
  }
  for (auto& [key, g] : groups) {
    if (g.stat.trials == 0) continue;
    g.stat = accuracy(g.stat.successes, g.stat.trials);
    report.accuracy.push_back(g);
  }

  for (const auto& g : report.accuracy) {
    if (g.participant_kind == ParticipantKind::llm) report.ordering.push_back(g.condition);
  }
  auto llm_accuracy = [&](Condition c) {
    return groups.at({c, ParticipantKind::llm}).stat.accuracy;
  };
  std::stable_sort(report.ordering.begin(), report.ordering.end(),
                   [&](Condition a, Condition b) { return llm_accuracy(a) > llm_accuracy(b); });

  for (const auto& [source, seqs] : inputs.translations) {
    if (seqs.empty()) continue;
    report.emoji_usage.emplace(source, emoji_usage_stats(seqs));
    if (seqs.size() >= 2) report.length.emplace(source, mean_length(seqs, inputs.bootstrap));
  }

  for (const auto& [condition, items] : paired) {
    std::vector<std::pair<bool, bool>> pairs;
    for (const auto& [id, p] : items) {
      if (p.first && p.second) pairs.emplace_back(*p.first, *p.second);
    }
    if (pairs.empty()) continue;
    CorrelationResult c;
    c.condition = condition;
    c.pairs = pairs.size();
    try {
      c.phi = correlation(pairs);
    } catch (const Error& e) {
      c.reason = std::string(to_string(e.code()));
    }
    report.correlation.push_back(std::move(c));
  }
  return report;
}

ordered_json report_to_json(const Report& report) {
  ordered_json out;
  ordered_json acc = ordered_json::object();
  for (const auto& g : report.accuracy) {
    acc[std::string(to_string(g.condition))][std::string(to_string(g.participant_kind))] = ordered_json{
        {"successes", g.stat.successes}, {"trials", g.stat.trials},  {"accuracy", g.stat.accuracy},
        {"ci_low", g.stat.ci_low},       {"ci_high", g.stat.ci_high}, {"errored", g.errored},
        {"flagged", g.flagged}};
  }
  out["accuracy"] = std::move(acc);
  out["ordering"] = ordered_json::array();
  for (auto c : report.ordering) out["ordering"].push_back(to_string(c));

  ordered_json usage = ordered_json::object();
  for (const auto& [source, u] : report.emoji_usage) {
    std::vector<std::pair<std::string, std::size_t>> counts(u.counts.begin(), u.counts.end());
    std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    ordered_json list = ordered_json::array();
    for (const auto& [emoji, n] : counts) list.push_back(ordered_json::array({emoji, n}));
    usage[source] = ordered_json{
        {"distinct", u.distinct}, {"total", u.total}, {"entropy", u.entropy}, {"counts", std::move(list)}};
  }
  out["emoji_usage"] = std::move(usage);

  ordered_json length = ordered_json::object();
  for (const auto& [source, l] : report.length) {
    length[source] = ordered_json{{"mean", l.mean}, {"ci_low", l.ci_low}, {"ci_high", l.ci_high}};
  }
  out["length"] = std::move(length);

  ordered_json corr = ordered_json::object();
  for (const auto& c : report.correlation) {
    ordered_json entry{{"pairs", c.pairs}, {"phi", c.phi ? ordered_json(*c.phi) : ordered_json(nullptr)}};
    if (!c.phi) entry["reason"] = c.reason;
    corr[std::string(to_string(c.condition))] = std::move(entry);
  }
  out["correlation"] = std::move(corr);
  return out;
}

std::string records_csv(std::span<const GuessRecord> records) {
  std::vector<const GuessRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const GuessRecord* a, const GuessRecord* b) {
    return std::tie(a->item_id, a->condition, a->participant_kind, a->participant_id) <
           std::tie(b->item_id, b->condition, b->participant_kind, b->participant_id);
  });
  std::string out = "item_id,condition,participant_kind,participant_id,guess,blank,matched,scored_by,flagged,error\n";
  for (const auto* r : sorted) {
    out += csv_field(r->item_id) + ',' + std::string(to_string(r->condition)) + ',' +
           std::string(to_string(r->participant_kind)) + ',' + csv_field(r->participant_id) + ',' +
           csv_field(r->guess) + ',' + (r->blank ? "true" : "false") + ',' +
           (r->matched ? (*r->matched ? "true" : "false") : "") + ',' +
           (r->scored_by ? std::string(to_string(*r->scored_by)) : "") + ',' + (r->flagged ? "true" : "false") +
           ',' + (r->error ? csv_field(r->error->code) : "") + '\n';
  }
  return out;
}

std::string accuracy_series_csv(const Report& report) {
  std::string out = "condition,participant_kind,successes,trials,accuracy,ci_low,ci_high\n";
  for (const auto& g : report.accuracy) {
    out += std::string(to_string(g.condition)) + ',' + std::string(to_string(g.participant_kind)) + ',' +
           std::to_string(g.stat.successes) + ',' + std::to_string(g.stat.trials) + ',' + fixed6(g.stat.accuracy) +
           ',' + fixed6(g.stat.ci_low) + ',' + fixed6(g.stat.ci_high) + '\n';
  }
  return out;
}

}  // namespace emojinize::eval
