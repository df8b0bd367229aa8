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


#include "emojinize/study.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "emojinize/emoji_text.hpp"
#include "emojinize/error.hpp"
#include "emojinize/llm_gateway.hpp"
#include "emojinize/utf8.hpp"
#include "fileio.hpp"
#include "strings.hpp"

namespace emojinize::study {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMaxPayloadBytes = 1000;

std::string random_session_id() {
  thread_local std::random_device rd;
  std::string out;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    out += buf;
  }
  return out;
}

std::string unit_key(const std::string& sample_id, const std::optional<eval::Condition>& c) {
  return c ? sample_id + "/" + std::string(eval::to_string(*c)) : sample_id;
}

char32_t lower_cp(char32_t c) { return c < 0x80 ? static_cast<char32_t>(std::tolower(static_cast<int>(c))) : c; }

// Blanks every remaining whole-word occurrence of `hidden` in `rendered`.
std::string mask_occurrences(const std::string& rendered, std::string_view hidden) {
  const auto text = utf8::decode(rendered);
  const auto needle = utf8::decode(hidden).code_points;
  if (needle.empty()) return rendered;
  std::string blanks;
  for (const auto& w : detail::split_whitespace(hidden)) {
    (void)w;
    if (!blanks.empty()) blanks += ' ';
    blanks += eval::kBlank;
  }
  const auto& cps = text.code_points;
  std::string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    bool hit = i + needle.size() <= cps.size() && (i == 0 || !detail::is_word_cp(cps[i - 1])) &&
               (i + needle.size() == cps.size() || !detail::is_word_cp(cps[i + needle.size()]));
    for (std::size_t k = 0; hit && k < needle.size(); ++k) hit = lower_cp(cps[i + k]) == lower_cp(needle[k]);
    if (hit) {
      out += blanks;
      i += needle.size();
    } else {
      out.append(rendered, text.byte_offsets[i], text.byte_offsets[i + 1] - text.byte_offsets[i]);
      ++i;
    }
  }
  return out;
}

ordered_json session_to_json(const Session& s) {
  ordered_json items = ordered_json::array();
  for (const auto& it : s.items) {
    ordered_json j{{"sample_id", it.sample_id}};
    if (it.condition) j["condition"] = eval::to_string(*it.condition);
    items.push_back(std::move(j));
  }
  return ordered_json{{"session_id", s.session_id}, {"task", to_string(s.task_kind)}, {"created_at", s.created_at},
                      {"cursor", s.cursor},         {"items", std::move(items)},       {"accepted", s.accepted}};
}

Session session_from_json(const json& j) {
  Session s;
  s.session_id = j.at("session_id").get<std::string>();
  s.task_kind = parse_task_kind(j.at("task").get<std::string>());
  s.created_at = j.at("created_at").get<std::string>();
  s.cursor = j.at("cursor").get<std::size_t>();
  for (const auto& it : j.at("items")) {
    AssignedItem a{it.at("sample_id").get<std::string>(), std::nullopt};
    if (it.contains("condition")) a.condition = eval::parse_condition(it.at("condition").get<std::string>());
    s.items.push_back(std::move(a));
  }
  s.accepted = j.at("accepted").get<std::vector<std::string>>();
  if (s.cursor > s.items.size() || s.accepted.size() != s.cursor) {
    throw Error(ErrorCode::IoError, "inconsistent session " + s.session_id + " in state file");
  }
  return s;
}

}  // namespace

std::string_view to_string(TaskKind k) noexcept { return k == TaskKind::translate ? "translate" : "cloze"; }

TaskKind parse_task_kind(std::string_view name) {
  if (name == "translate") return TaskKind::translate;
  if (name == "cloze") return TaskKind::cloze;
  throw Error(ErrorCode::InvalidArgument, "unknown task kind \"" + std::string(name) + "\"");
}

ordered_json emoji_inventory() {
  ordered_json list = ordered_json::array();
  for (const auto& e : text::rgi_emoji()) list.push_back(ordered_json{{"emoji", e.emoji}, {"name", e.name}});
  return ordered_json{{"unicode_version", text::unicode_version()}, {"emoji", std::move(list)}};
}

struct StudyService::Slot {
  std::mutex mu;
  Session session;
};

StudyService::StudyService(corpus::CorpusFile corpus, std::map<eval::Condition, eval::HintMap> hints,
                           StudyConfig config)
    : corpus_(std::move(corpus)), hints_(std::move(hints)), config_(std::move(config)) {
  if (config_.batch_size == 0) throw Error(ErrorCode::ConfigInvalid, "study batch_size must be positive");
  if (config_.cloze_conditions.empty()) throw Error(ErrorCode::ConfigInvalid, "no cloze conditions configured");
  if (config_.translate_records.empty() || config_.cloze_records.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "study record paths must be set");
  }
  if (!config_.id_generator) config_.id_generator = random_session_id;
  load_state();
}

StudyService::~StudyService() = default;

std::string StudyService::now() const { return config_.clock ? config_.clock() : llm::utc_timestamp(); }

std::vector<StudyService::Unit> StudyService::units(TaskKind kind) const {
  std::vector<Unit> out;
  const auto& conds = config_.cloze_conditions;
  for (std::size_t i = 0; i < corpus_.entries.size(); ++i) {
    if (kind == TaskKind::translate) {
      out.emplace_back(i, std::nullopt);
      continue;
    }
    // Rotate the condition order per sample so one session mixes conditions.
    for (std::size_t j = 0; j < conds.size(); ++j) {
      const auto c = conds[(i + j) % conds.size()];
      if (c != eval::Condition::baseline) {
        auto h = hints_.find(c);
        if (h == hints_.end() || !h->second.count(corpus_.entries[i].sample.id)) continue;
      }
      out.emplace_back(i, c);
    }
  }
  return out;
}

Session StudyService::create_session(TaskKind kind) {
  Session s;
  {
    std::unique_lock lock(sessions_mu_);
    auto candidates = units(kind);
    std::vector<std::pair<std::size_t, Unit>> ranked;
    for (const auto& u : candidates) {
      const auto& id = corpus_.entries[u.first].sample.id;
      const auto it = assigned_.find(unit_key(id, u.second));
      const std::size_t n = it == assigned_.end() ? 0 : it->second;
      if (config_.max_assignments && n >= config_.max_assignments) continue;
      ranked.emplace_back(n, u);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::set<std::size_t> used;
    for (const auto& [n, u] : ranked) {
      if (s.items.size() == config_.batch_size) break;
      if (!used.insert(u.first).second) continue;
      s.items.push_back(AssignedItem{corpus_.entries[u.first].sample.id, u.second});
    }
    if (s.items.empty()) throw Error(ErrorCode::CorpusExhausted, "no items left to assign");
    do {
      s.session_id = config_.id_generator();
    } while (sessions_.count(s.session_id));
    s.task_kind = kind;
    s.created_at = now();
    for (const auto& it : s.items) ++assigned_[unit_key(it.sample_id, it.condition)];
    auto slot = std::make_shared<Slot>();
    slot->session = s;
    sessions_.emplace(s.session_id, std::move(slot));
  }
  save_state();
  return s;
}

std::shared_ptr<StudyService::Slot> StudyService::find(std::string_view session_id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session \"" + std::string(session_id) + "\"");
  return it->second;
}

ordered_json StudyService::next_item(std::string_view session_id) {
  const auto slot = find(session_id);
  std::lock_guard lock(slot->mu);
  const Session& s = slot->session;
  if (s.complete()) throw Error(ErrorCode::SessionComplete, "session " + s.session_id + " is complete");
  const auto& assigned = s.items[s.cursor];
  const auto* entry = corpus_.find(assigned.sample_id);
  if (!entry) throw Error(ErrorCode::IoError, "session refers to unknown sample " + assigned.sample_id);

  ordered_json out{{"session_id", s.session_id},
                   {"task", to_string(s.task_kind)},
                   {"item_id", assigned.sample_id},
                   {"position", s.cursor},
                   {"total", s.items.size()}};
  if (s.task_kind == TaskKind::translate) {
    const auto& span = entry->target.span;
    const auto& text = entry->sample.text;
    out["text"] = text;
    out["span"] = ordered_json{{"start", span.start}, {"end", span.end}};
    out["passage"] = entry->target.surface;
    out["marked"] = utf8::substr(text, 0, span.start) + "<" + entry->target.surface + ">" +
                    utf8::substr(text, span.end, utf8::length(text));
    return out;
  }
  const eval::Condition condition = *assigned.condition;
  const eval::Hint* hint = nullptr;
  if (condition != eval::Condition::baseline) {
    const auto& map = hints_.at(condition);
    hint = &map.at(assigned.sample_id);
  }
  const auto item = eval::make_cloze_item(*entry, condition, hint);
  out["condition"] = eval::to_string(condition);
  out["cloze"] = mask_occurrences(eval::render_cloze(item), item.hidden_surface);
  out["hint"] = item.hint ? ordered_json(item.hint->text()) : ordered_json(nullptr);
  return out;
}

SubmitResult StudyService::submit(std::string_view session_id, std::string_view item_id, std::string_view payload) {
  const auto slot = find(session_id);
  SubmitResult result;
  {
    std::lock_guard lock(slot->mu);
    Session& s = slot->session;
    for (std::size_t i = 0; i < s.cursor; ++i) {
      if (s.items[i].sample_id == item_id) {
        return SubmitResult{true, true, s.cursor, s.complete()};
      }
    }
    if (s.complete()) throw Error(ErrorCode::SessionComplete, "session " + s.session_id + " is complete");
    const auto& assigned = s.items[s.cursor];
    if (assigned.sample_id != item_id) {
      throw Error(ErrorCode::WrongItem,
                  "expected item " + assigned.sample_id + ", got \"" + std::string(item_id) + "\"");
    }
    if (payload.size() > kMaxPayloadBytes) throw Error(ErrorCode::InvalidArgument, "payload too long");

    std::string line;
    if (s.task_kind == TaskKind::translate) {
      std::optional<text::EmojiSequence> seq;
      try {
        seq = text::parse_emoji_sequence(payload);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidEmoji, e.what());
      }
      line = ordered_json{{"sample_id", assigned.sample_id},
                          {"emoji", seq->text()},
                          {"session_id", s.session_id},
                          {"received_at", now()}}
                 .dump();
      detail::append_file(config_.translate_records, line + "\n");
    } else {
      eval::GuessRecord r;
      r.item_id = assigned.sample_id;
      r.condition = *assigned.condition;
      r.participant_kind = eval::ParticipantKind::human;
      r.participant_id = s.session_id;
      r.guess = std::string(detail::trim(payload));
      r.blank = r.guess.empty();
      auto j = eval::to_json(r);
      j["received_at"] = now();
      line = j.dump();
      detail::append_file(config_.cloze_records, line + "\n");
    }
    s.accepted.push_back(std::move(line));
    ++s.cursor;
    result = SubmitResult{true, false, s.cursor, s.complete()};
  }
  save_state();
  return result;
}

std::optional<Session> StudyService::session(std::string_view session_id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  std::lock_guard slot_lock(it->second->mu);
  return it->second->session;
}

std::size_t StudyService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

const std::string& StudyService::emoji_inventory_json() const {
  std::call_once(emoji_once_, [this] { emoji_json_ = emoji_inventory().dump(); });
  return emoji_json_;
}

void StudyService::save_state() {
  if (config_.state_path.empty()) return;
  std::lock_guard save_lock(save_mu_);
  ordered_json sessions = ordered_json::array();
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [id, slot] : sessions_) {
      std::lock_guard slot_lock(slot->mu);
      sessions.push_back(session_to_json(slot->session));
    }
  }
  const ordered_json state{{"format_version", 1}, {"sessions", std::move(sessions)}};
  detail::write_file_atomic(config_.state_path, state.dump(1) + "\n");
}

void StudyService::load_state() {
  if (config_.state_path.empty() || !std::filesystem::exists(config_.state_path)) return;
  try {
    const auto state = json::parse(detail::read_file(config_.state_path));
    for (const auto& j : state.at("sessions")) {
      auto slot = std::make_shared<Slot>();
      slot->session = session_from_json(j);
      for (const auto& it : slot->session.items) {
        if (!corpus_.find(it.sample_id)) {
          throw Error(ErrorCode::IoError, "state refers to sample " + it.sample_id + " missing from the corpus");
        }
        ++assigned_[unit_key(it.sample_id, it.condition)];
      }
      sessions_.emplace(slot->session.session_id, std::move(slot));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "bad study state file " + config_.state_path.string() + ": " + e.what());
  }
}

}  // namespace emojinize::study
