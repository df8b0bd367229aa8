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
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emojinize/cloze.hpp"
#include "emojinize/corpus.hpp"
#include "emojinize/evaluation.hpp"

namespace emojinize::study {

enum class TaskKind { translate, cloze };
std::string_view to_string(TaskKind k) noexcept;
/// Throws Error(InvalidArgument).
TaskKind parse_task_kind(std::string_view name);

struct StudyConfig {
  // Items per session.
  std::size_t batch_size = 10;
  // Stop assigning a unit once it has this many sessions; 0 means no cap.
  std::size_t max_assignments = 0;
  // Conditions a cloze session draws from. Non-baseline conditions need
  // hints for a sample before it is offered under them.
  std::vector<eval::Condition> cloze_conditions{eval::Condition::baseline, eval::Condition::human_translation,
                                                eval::Condition::emojinize};
  std::filesystem::path state_path;
  std::filesystem::path translate_records;
  std::filesystem::path cloze_records;
  // Produces created_at / received_at; defaults to the current UTC time.
  std::function<std::string()> clock;
  // Produces session ids; defaults to 128 random bits in hex.
  std::function<std::string()> id_generator;
};

struct AssignedItem {
  std::string sample_id;
  // Set for cloze sessions.
  std::optional<eval::Condition> condition;
};

struct Session {
  std::string session_id;
  TaskKind task_kind = TaskKind::translate;
  std::vector<AssignedItem> items;
  std::size_t cursor = 0;
  std::string created_at;
  // The stored record line of every accepted item, by position.
  std::vector<std::string> accepted;

  [[nodiscard]] bool complete() const noexcept { return cursor >= items.size(); }
};

struct SubmitResult {
  bool accepted = false;
  // Set when the item had already been accepted; nothing new was stored.
  bool duplicate = false;
  std::size_t cursor = 0;
  bool complete = false;
};

/// Translation and cloze sessions over a corpus. Records go to two
/// line-delimited logs; session state is rewritten atomically after every
/// change and reloaded on construction.
class StudyService {
 public:
  StudyService(corpus::CorpusFile corpus, std::map<eval::Condition, eval::HintMap> hints, StudyConfig config);
  ~StudyService();

  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  /// Least-answered-first assignment of up to batch_size distinct samples.
  /// Throws Error(CorpusExhausted) when nothing can be assigned.
  Session create_session(TaskKind kind);

  /// Task payload for the item at the cursor. Cloze payloads never carry the
  /// hidden text or its span. Throws UnknownSession / SessionComplete.
  nlohmann::ordered_json next_item(std::string_view session_id);

  /// Throws UnknownSession, WrongItem, SessionComplete or InvalidEmoji; a
  /// rejected submission leaves the cursor where it was.
  SubmitResult submit(std::string_view session_id, std::string_view item_id, std::string_view payload);

  [[nodiscard]] std::optional<Session> session(std::string_view session_id) const;
  [[nodiscard]] std::size_t session_count() const;
  [[nodiscard]] const corpus::CorpusFile& corpus() const noexcept { return corpus_; }

  /// {"unicode_version", "emoji": [{"emoji", "name"}...]} in data order.
  [[nodiscard]] const std::string& emoji_inventory_json() const;

 private:
  struct Slot;
  using Unit = std::pair<std::size_t, std::optional<eval::Condition>>;

  std::vector<Unit> units(TaskKind kind) const;
  std::shared_ptr<Slot> find(std::string_view session_id) const;
  void save_state();
  void load_state();
  std::string now() const;

  corpus::CorpusFile corpus_;
  std::map<eval::Condition, eval::HintMap> hints_;
  StudyConfig config_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  // Assignments per unit, keyed "<sample_id>" or "<sample_id>/<condition>".
  std::map<std::string, std::size_t> assigned_;
  std::mutex save_mu_;
  mutable std::once_flag emoji_once_;
  mutable std::string emoji_json_;
};

/// Lists every emoji of the inventory exactly once.
nlohmann::ordered_json emoji_inventory();

// --- HTTP -------------------------------------------------------------------

struct ServerOptions {
  std::string host = "127.0.0.1";
  // 0 picks a free port.
  int port = 8080;
  // Participant UI bundle served at "/" when set.
  std::filesystem::path static_dir;
};

/// HTTP+JSON front end for a StudyService. Runs on its own thread between
/// start() and stop().
class StudyServer {
 public:
  StudyServer(StudyService& service, ServerOptions options);
  ~StudyServer();

  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  /// Binds and starts serving; returns the bound port. Throws Error(IoError).
  int start();
  /// Blocks serving on the calling thread until stop() is called elsewhere.
  void run();
  void stop();
  [[nodiscard]] int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace emojinize::study
