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


#include "fixture_protocol.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <vector>

#include "emojinize/corpus.hpp"
#include "emojinize/error.hpp"
#include "emojinize/study.hpp"

#ifndef EMOJINIZE_FIXTURE_DIR
#error "EMOJINIZE_FIXTURE_DIR must be defined"
#endif

namespace emojinize::testsupport {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::set<std::string> words_of(std::string_view s) {
  std::set<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isalnum(c) || c == '\'')) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct OracleState {
  fs::path corpus_path;
  OracleLimits limits;
  std::once_flag loaded;
  corpus::CorpusFile corpus;
  std::vector<std::set<std::string>> words;

  void load() {
    std::call_once(loaded, [this] {
      corpus = corpus::read_corpus(corpus_path);
      for (const auto& e : corpus.entries) words.push_back(words_of(e.sample.text));
    });
  }

  // Corpus position of the passage a cloze prompt was made from.
  std::size_t locate(std::string_view prompt) {
    load();
    const auto p = words_of(prompt);
    std::size_t best = 0;
    double best_score = -1;
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::size_t shared = 0;
      for (const auto& w : p) shared += words[i].count(w);
      const double score = static_cast<double>(shared) / static_cast<double>(p.size() + words[i].size() - shared);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  std::optional<std::string> answer(const llm::ChatRequest& req) {
    const auto system = req.system_content();
    const auto& user = req.last_user_content();
    if (system.rfind("You screen", 0) == 0) {
      json verdict{{"spam", user.find("Subscribe") != std::string::npos},
                   {"non_english", user.find("Wetter") != std::string::npos},
                   {"formatting", false},
                   {"violent_or_sexual", false}};
      return verdict.dump();
    }
    if (system.rfind("You translate", 0) == 0) {
      std::vector<std::string> passages;
      for (std::size_t at = user.find('<'); at != std::string::npos; at = user.find('<', at + 1)) {
        const auto close = user.find('>', at);
        if (close == std::string::npos) break;
        passages.push_back(user.substr(at + 1, close - at - 1));
      }
      if (passages.empty()) return std::nullopt;
      if (passages.size() == 1) return json{{"text", passages[0]}, {"emoji", kModelEmoji}}.dump();
      return json{{"text", passages}, {"emoji", std::vector<std::string>(passages.size(), std::string(kModelEmoji))}}
          .dump();
    }
    if (system.rfind("Find all possible translation units", 0) == 0) {
      std::vector<std::string> units;
      std::string cur;
      for (char ch : user + " ") {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
          cur += ch;
        } else if (!cur.empty()) {
          units.push_back(cur);
          cur.clear();
        }
      }
      return json{{"units", units}}.dump();
    }
    if (system.rfind("You are taking a cloze test", 0) == 0) {
      const auto i = locate(user);
      std::size_t limit = limits.no_hint;
      if (user.find(kModelEmoji) != std::string::npos) {
        limit = limits.model_hint;
      } else if (user.find(kHumanEmoji) != std::string::npos) {
        limit = limits.human_hint;
      }
      return i < limit ? corpus.entries[i].target.surface : std::string("something");
    }
    if (system.rfind("Decide whether", 0) == 0) {
      const auto first = user.find("First: ");
      const auto second = user.find("\nSecond: ");
      if (first == std::string::npos || second == std::string::npos) return std::nullopt;
      const auto a = lower_trim(std::string_view(user).substr(first + 7, second - first - 7));
      const auto b = lower_trim(std::string_view(user).substr(second + 9));
      return a == b ? "yes" : "no";
    }
    return std::nullopt;
  }
};

}  // namespace

std::shared_ptr<llm::ScriptedBackend> make_fixture_oracle(const fs::path& corpus_path, OracleLimits limits) {
  auto state = std::make_shared<OracleState>();
  state->corpus_path = corpus_path;
  state->limits = limits;
  auto backend = std::make_shared<llm::ScriptedBackend>();
  backend->set_responder([state](const llm::ChatRequest& req) { return state->answer(req); });
  return backend;
}

json fixture_config_json() {
  const fs::path sources = fs::path(EMOJINIZE_FIXTURE_DIR) / "sources";
  return json{
      {"gateway", {{"endpoint", "scripted:fixture-oracle.json"}}},
      {"corpus",
       {{"sources", json::array({json{{"kind", "news"}, {"directory", (sources / "news").string()}, {"count", 10}},
                                 json{{"kind", "ebook"}, {"directory", (sources / "ebooks").string()}, {"count", 10}}})},
        {"seed", 7}}},
      {"evaluation", {{"conditions", {"baseline", "human_translation", "emojinize"}}}},
  };
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t collect_human_translations(const pipeline::Pipeline& pipeline) {
  const auto& paths = pipeline.config().paths;
  study::StudyConfig sc;
  sc.max_assignments = 1;
  sc.state_path = paths.study / "state.json";
  sc.translate_records = paths.study / "translations.jsonl";
  sc.cloze_records = paths.study / "cloze.jsonl";
  sc.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  auto counter = std::make_shared<int>(0);
  sc.id_generator = [counter] { return "fixture-session-" + std::to_string(++*counter); };
  study::StudyService service(corpus::read_corpus(paths.corpus), {}, std::move(sc));
  std::size_t submitted = 0;
  while (true) {
    study::Session session;
    try {
      session = service.create_session(study::TaskKind::translate);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorpusExhausted) break;
      throw;
    }
    for (std::size_t i = 0; i < session.items.size(); ++i) {
      const auto item = service.next_item(session.session_id);
      service.submit(session.session_id, item.at("item_id").get<std::string>(), kHumanEmoji);
      ++submitted;
    }
  }
  return submitted;
}

ProtocolRun run_fixture_protocol(const fs::path& work_dir, std::shared_ptr<llm::Backend> backend) {
  fs::create_directories(work_dir);
  const auto config_file = work_dir / "config.json";
  {
    std::ofstream out(config_file, std::ios::binary);
    out << fixture_config_json().dump(2) << "\n";
  }
  auto config = pipeline::load_config(config_file, [](const std::string&) { return std::optional<std::string>(); });
  std::shared_ptr<llm::ScriptedBackend> oracle;
  if (!backend) {
    oracle = make_fixture_oracle(config.paths.corpus);
    backend = oracle;
  }
  pipeline::PipelineOptions options;
  options.backend = backend;
  pipeline::Pipeline p(std::move(config), options);
  p.build_corpus();
  for (auto mode : pipeline::all_translate_modes()) p.translate(mode);
  collect_human_translations(p);
  p.evaluate();
  p.report();
  return ProtocolRun{work_dir, oracle ? oracle->calls() : 0, p.gateway().stats()};
}

}  // namespace emojinize::testsupport
