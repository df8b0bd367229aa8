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


#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "emojinize/error.hpp"
#include "emojinize/evaluation.hpp"
#include "emojinize/study.hpp"
#include "emojinize/utf8.hpp"

namespace emojinize::study {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kWords{"violin", "harbor", "lantern", "meadow",  "pepper", "glacier", "saddle",
                                      "orchid", "kettle", "canyon",  "parrot",  "anchor", "blanket", "castle",
                                      "dolphin", "feather", "garlic", "helmet", "igloo",  "jacket"};

corpus::CorpusFile make_corpus(std::size_t n = 20) {
  corpus::CorpusFile c;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::CorpusEntry e;
    e.sample.id = "news-s" + std::to_string(100 + i);
    e.sample.text = "Report " + std::to_string(i) + ": a " + kWords[i] + " was found by the river.";
    // One passage repeats its hidden word in another case.
    if (i == 3) e.sample.text += " Meadow owners were pleased.";
    e.sample.origin = "fixture/" + std::to_string(i);
    const auto byte = e.sample.text.find(kWords[i]);
    const auto start = utf8::length(std::string_view(e.sample.text).substr(0, byte));
    e.target = {e.sample.id, {start, start + kWords[i].size()}, kWords[i], corpus::WordClass::noun};
    c.entries.push_back(e);
  }
  c.manifest.counts["news"] = n;
  return c;
}

std::map<eval::Condition, eval::HintMap> make_hints(const corpus::CorpusFile& c) {
  std::map<eval::Condition, eval::HintMap> hints;
  for (const auto& e : c.entries) {
    hints[eval::Condition::human_translation].emplace(
        e.sample.id, eval::Hint{text::parse_emoji_sequence("🔍"), e.target.span, e.target.surface});
    hints[eval::Condition::emojinize].emplace(
        e.sample.id, eval::Hint{text::parse_emoji_sequence("🎯"), e.target.span, e.target.surface});
  }
  return hints;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emojinize_study_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

StudyConfig config_in(const fs::path& dir, std::size_t batch = 10) {
  StudyConfig c;
  c.batch_size = batch;
  c.state_path = dir / "state.json";
  c.translate_records = dir / "translations.jsonl";
  c.cloze_records = dir / "cloze.jsonl";
  c.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return c;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

bool contains_word(std::string hay, std::string word) {
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  hay = lower(hay);
  word = lower(word);
  for (auto pos = hay.find(word); pos != std::string::npos; pos = hay.find(word, pos + 1)) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
    const auto end = pos + word.size();
    const bool right = end == hay.size() || !std::isalnum(static_cast<unsigned char>(hay[end]));
    if (left && right) return true;
  }
  return false;
}

TEST(Assignment, BatchSizeAndLeastAnsweredFirst) {
  TempDir dir;
  StudyService svc(make_corpus(), {}, config_in(dir.path));
  const auto a = svc.create_session(TaskKind::translate);
  const auto b = svc.create_session(TaskKind::translate);
  ASSERT_EQ(a.items.size(), 10u);
  ASSERT_EQ(b.items.size(), 10u);
  std::set<std::string> seen;
  for (const auto& s : {a, b}) {
    for (const auto& it : s.items) EXPECT_TRUE(seen.insert(it.sample_id).second) << it.sample_id;
  }
  EXPECT_EQ(seen.size(), 20u);
  EXPECT_EQ(a.session_id.size(), 32u);
  EXPECT_NE(a.session_id, b.session_id);
  // Every sample has one assignment now, so the next session starts over.
  EXPECT_EQ(svc.create_session(TaskKind::translate).items.front().sample_id, a.items.front().sample_id);
}

TEST(Assignment, ClozeMixesConditionsWithDistinctSamples) {
  TempDir dir;
  const auto corpus = make_corpus();
  StudyService svc(corpus, make_hints(corpus), config_in(dir.path));
  const auto s = svc.create_session(TaskKind::cloze);
  std::set<std::string> samples;
  std::set<eval::Condition> conditions;
  for (const auto& it : s.items) {
    samples.insert(it.sample_id);
    conditions.insert(*it.condition);
  }
  EXPECT_EQ(samples.size(), 10u);
  EXPECT_EQ(conditions.size(), 3u);
}

TEST(Assignment, ClozeSkipsConditionsWithoutHints) {
  TempDir dir;
  StudyService svc(make_corpus(), {}, config_in(dir.path));
  for (const auto& it : svc.create_session(TaskKind::cloze).items) EXPECT_EQ(*it.condition, eval::Condition::baseline);
}

TEST(Assignment, ExhaustedCorpus) {
  TempDir dir;
  StudyService empty(make_corpus(0), {}, config_in(dir.path));
  EXPECT_EQ(code_of([&] { empty.create_session(TaskKind::translate); }), ErrorCode::CorpusExhausted);

  auto cfg = config_in(dir.path / "capped");
  cfg.max_assignments = 1;
  StudyService capped(make_corpus(), {}, cfg);
  capped.create_session(TaskKind::translate);
  capped.create_session(TaskKind::translate);
  EXPECT_EQ(code_of([&] { capped.create_session(TaskKind::translate); }), ErrorCode::CorpusExhausted);
}

TEST(Sessions, NextAndCompletion) {
  TempDir dir;
  StudyService svc(make_corpus(), {}, config_in(dir.path, 2));
  const auto s = svc.create_session(TaskKind::translate);
  auto item = svc.next_item(s.session_id);
  EXPECT_EQ(item["position"], 0);
  EXPECT_EQ(item["item_id"], s.items[0].sample_id);
  EXPECT_EQ(item["marked"].get<std::string>().find('<') != std::string::npos, true);
  svc.submit(s.session_id, s.items[0].sample_id, "🎻");
  svc.submit(s.session_id, s.items[1].sample_id, "⚓");
  EXPECT_EQ(code_of([&] { svc.next_item(s.session_id); }), ErrorCode::SessionComplete);
  EXPECT_EQ(code_of([&] { svc.next_item("feedface"); }), ErrorCode::UnknownSession);
  EXPECT_EQ(code_of([&] { svc.submit("feedface", "x", "🎻"); }), ErrorCode::UnknownSession);
}

TEST(Sessions, TranslateValidationAndIdempotence) {
  TempDir dir;
  const auto cfg = config_in(dir.path);
  StudyService svc(make_corpus(), {}, cfg);
  const auto s = svc.create_session(TaskKind::translate);
  const auto& first = s.items[0].sample_id;

  EXPECT_EQ(code_of([&] { svc.submit(s.session_id, first, "cat"); }), ErrorCode::InvalidEmoji);
  EXPECT_EQ(svc.session(s.session_id)->cursor, 0u);
  EXPECT_EQ(code_of([&] { svc.submit(s.session_id, s.items[1].sample_id, "🐈"); }), ErrorCode::WrongItem);

  const auto ok = svc.submit(s.session_id, first, "🐈");
  EXPECT_TRUE(ok.accepted);
  EXPECT_FALSE(ok.duplicate);
  EXPECT_EQ(ok.cursor, 1u);
  const auto again = svc.submit(s.session_id, first, "🐈");
  EXPECT_TRUE(again.duplicate);
  EXPECT_EQ(again.cursor, 1u);
  EXPECT_EQ(line_count(cfg.translate_records), 1u);
}

TEST(Sessions, TranslateRecordsRoundTripThroughImport) {
  TempDir dir;
  const auto cfg = config_in(dir.path, 20);
  const auto corpus = make_corpus();
  StudyService svc(corpus, {}, cfg);
  const auto s = svc.create_session(TaskKind::translate);
  const std::vector<std::string> answers{"🐈", "⚓ 🌊", "👩‍🚀", "🇯🇵", "❤️"};
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    svc.submit(s.session_id, s.items[i].sample_id, answers[i % answers.size()]);
  }
  const auto hints = eval::load_human_translations(cfg.translate_records, corpus);
  EXPECT_EQ(hints.size(), 20u);
  EXPECT_EQ(hints.at(s.items[2].sample_id).emoji.text(), "👩‍🚀");
}

TEST(Sessions, ClozePayloadsNeverLeakTheAnswer) {
  TempDir dir;
  const auto corpus = make_corpus();
  StudyService svc(corpus, make_hints(corpus), config_in(dir.path, 20));
  // Three sessions of 20 cover every (sample, condition) cell once.
  std::set<std::string> cells;
  for (int k = 0; k < 3; ++k) {
    const auto s = svc.create_session(TaskKind::cloze);
    for (const auto& it : s.items) {
      const auto payload = svc.next_item(s.session_id);
      const auto* entry = corpus.find(it.sample_id);
      const auto body = payload.dump();
      EXPECT_FALSE(contains_word(body, entry->target.surface)) << body;
      EXPECT_FALSE(payload.contains("hidden_surface"));
      EXPECT_FALSE(payload.contains("span"));
      EXPECT_NE(payload["cloze"].get<std::string>().find(std::string(eval::kBlank)), std::string::npos);
      EXPECT_EQ(payload["hint"].is_null(), *it.condition == eval::Condition::baseline);
      cells.insert(it.sample_id + "/" + payload["condition"].get<std::string>());
      svc.submit(s.session_id, it.sample_id, "guess");
    }
  }
  EXPECT_EQ(cells.size(), 60u);
}

TEST(Sessions, ClozeGuessesBecomeUnscoredHumanRecords) {
  TempDir dir;
  const auto cfg = config_in(dir.path, 3);
  StudyService svc(make_corpus(), {}, cfg);
  const auto s = svc.create_session(TaskKind::cloze);
  svc.submit(s.session_id, s.items[0].sample_id, "  sofa ");
  svc.submit(s.session_id, s.items[1].sample_id, "");
  const auto records = eval::read_records(cfg.cloze_records);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].guess, "sofa");
  EXPECT_EQ(records[0].participant_kind, eval::ParticipantKind::human);
  EXPECT_EQ(records[0].participant_id, s.session_id);
  EXPECT_FALSE(records[0].scored());
  EXPECT_TRUE(records[1].blank);
}

TEST(Sessions, StateSurvivesRestart) {
  TempDir dir;
  const auto cfg = config_in(dir.path);
  std::string id;
  std::vector<AssignedItem> items;
  {
    StudyService svc(make_corpus(), {}, cfg);
    const auto s = svc.create_session(TaskKind::translate);
    id = s.session_id;
    items = s.items;
    svc.submit(id, items[0].sample_id, "🎻");
  }
  StudyService again(make_corpus(), {}, cfg);
  const auto s = again.session(id);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->cursor, 1u);
  EXPECT_EQ(again.next_item(id)["item_id"], items[1].sample_id);
  EXPECT_TRUE(again.submit(id, items[0].sample_id, "🎻").duplicate);
  // Assignment counts are rebuilt, so the next session takes the other half.
  const auto next = again.create_session(TaskKind::translate);
  for (const auto& it : next.items) {
    EXPECT_TRUE(std::none_of(items.begin(), items.end(), [&](const auto& a) { return a.sample_id == it.sample_id; }));
  }
}

TEST(Sessions, ConcurrentSessionsKeepRecordsConsistent) {
  TempDir dir;
  const auto cfg = config_in(dir.path, 5);
  StudyService svc(make_corpus(), {}, cfg);
  std::vector<std::thread> threads;
  std::atomic<int> accepted = 0;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      const auto s = svc.create_session(TaskKind::translate);
      for (const auto& it : s.items) {
        // Every submission is sent twice, as a retrying client would.
        if (!svc.submit(s.session_id, it.sample_id, "🐈").duplicate) ++accepted;
        svc.submit(s.session_id, it.sample_id, "🐈");
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(accepted.load(), 40);
  EXPECT_EQ(line_count(cfg.translate_records), 40u);
  const auto state = json::parse(slurp(cfg.state_path));
  EXPECT_EQ(state["sessions"].size(), 8u);
}

TEST(EmojiInventory, CompleteOrderedAndNamed) {
  const auto inv = emoji_inventory();
  const auto& list = inv["emoji"];
  EXPECT_EQ(list.size(), text::rgi_emoji().size());
  std::set<std::string> unique;
  bool cricket = false;
  for (const auto& e : list) {
    EXPECT_TRUE(unique.insert(e["emoji"].get<std::string>()).second);
    if (e["emoji"] == "🏏") cricket = e["name"] == "cricket game";
  }
  EXPECT_TRUE(cricket);
  EXPECT_EQ(emoji_inventory().dump(), inv.dump());
  EXPECT_EQ(inv["unicode_version"], std::string(text::unicode_version()));
}

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::create_directories(dir.path / "ui");
    std::ofstream(dir.path / "ui" / "index.html") << "<!doctype html><title>study</title>";
    corpus = make_corpus();
    svc = std::make_unique<StudyService>(corpus, make_hints(corpus), config_in(dir.path, 2));
    server = std::make_unique<StudyServer>(*svc, ServerOptions{"127.0.0.1", 0, dir.path / "ui"});
    port = server->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override { server->stop(); }

  json post(const std::string& path, const std::string& body, int expect) {
    auto res = client->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expect) {
    auto res = client->Get(path);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

  TempDir dir;
  corpus::CorpusFile corpus;
  std::unique_ptr<StudyService> svc;
  std::unique_ptr<StudyServer> server;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST_F(Http, TranslateFlow) {
  EXPECT_EQ(get("/healthz", 200)["status"], "ok");
  const auto created = post("/sessions", R"({"task":"translate"})", 201);
  const std::string id = created["session_id"];
  EXPECT_EQ(created["total"], 2);

  auto item = get("/sessions/" + id + "/next", 200);
  const std::string item_id = item["item_id"];
  EXPECT_EQ(item["task"], "translate");

  auto bad = post("/sessions/" + id + "/submit", json{{"item_id", item_id}, {"payload", "cat"}}.dump(), 422);
  EXPECT_EQ(bad["accepted"], false);
  EXPECT_EQ(bad["error"]["code"], "InvalidEmoji");
  EXPECT_EQ(get("/sessions/" + id + "/next", 200)["item_id"], item_id);

  auto ok = post("/sessions/" + id + "/submit", json{{"item_id", item_id}, {"payload", "🎻"}}.dump(), 200);
  EXPECT_EQ(ok["accepted"], true);
  EXPECT_EQ(ok["cursor"], 1);
  auto dup = post("/sessions/" + id + "/submit", json{{"item_id", item_id}, {"payload", "🎻"}}.dump(), 200);
  EXPECT_EQ(dup["duplicate"], true);
  auto wrong = post("/sessions/" + id + "/submit", json{{"item_id", "nope"}, {"payload", "🎻"}}.dump(), 409);
  EXPECT_EQ(wrong["error"]["code"], "WrongItem");

  const std::string second = get("/sessions/" + id + "/next", 200)["item_id"];
  EXPECT_EQ(post("/sessions/" + id + "/submit", json{{"item_id", second}, {"payload", "⚓"}}.dump(), 200)["complete"],
            true);
  EXPECT_EQ(get("/sessions/" + id + "/next", 409)["error"]["code"], "SessionComplete");
}

TEST_F(Http, ClozeFlowHidesAnswer) {
  const std::string id = post("/sessions", R"({"task":"cloze"})", 201)["session_id"];
  auto res = client->Get("/sessions/" + id + "/next");
  ASSERT_TRUE(res);
  const auto item = json::parse(res->body);
  const auto* entry = corpus.find(item["item_id"].get<std::string>());
  ASSERT_NE(entry, nullptr);
  EXPECT_FALSE(contains_word(res->body, entry->target.surface));
  EXPECT_EQ(post("/sessions/" + id + "/submit", json{{"item_id", item["item_id"]}, {"payload", "sofa"}}.dump(), 200)
                ["accepted"],
            true);
}

TEST_F(Http, ErrorsAndStaticFiles) {
  EXPECT_EQ(get("/sessions/deadbeef/next", 404)["error"]["code"], "UnknownSession");
  EXPECT_EQ(post("/sessions", "{not json", 400)["error"]["code"], "InvalidArgument");
  EXPECT_EQ(post("/sessions", R"({"task":"survey"})", 400)["error"]["code"], "InvalidArgument");
  EXPECT_EQ(post("/sessions/deadbeef/submit", R"({"item_id":"a","payload":"🐈"})", 404)["accepted"], false);

  const auto inv = get("/emoji", 200);
  EXPECT_EQ(inv["emoji"].size(), text::rgi_emoji().size());
  EXPECT_FALSE(inv.contains("categories"));

  auto page = client->Get("/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_NE(page->body.find("<title>study</title>"), std::string::npos);
}

}  // namespace
}  // namespace emojinize::study
