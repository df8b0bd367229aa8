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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>

#include "emojinize/error.hpp"
#include "emojinize/evaluation.hpp"
#include "emojinize/llm_backends.hpp"
#include "emojinize/utf8.hpp"

namespace emojinize::eval {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kWords{"violin", "harbor", "lantern", "meadow",  "pepper", "glacier", "saddle",
                                      "orchid", "kettle", "canyon",  "parrot",  "anchor", "blanket", "castle",
                                      "dolphin", "feather", "garlic", "helmet", "igloo",  "jacket"};

corpus::CorpusFile make_corpus(std::size_t n = 20) {
  corpus::CorpusFile c;
  c.manifest.seed = 7;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::CorpusEntry e;
    e.sample.id = "news-item" + std::to_string(100 + i);
    e.sample.text = "Story " + std::to_string(i) + " says the " + kWords[i] + " was seen near the old mill.";
    e.sample.source_kind = corpus::SourceKind::news;
    e.sample.origin = "fixture/" + std::to_string(i);
    const auto byte = e.sample.text.find(kWords[i]);
    const auto start = utf8::length(std::string_view(e.sample.text).substr(0, byte));
    e.target = {e.sample.id, {start, start + kWords[i].size()}, kWords[i], corpus::WordClass::noun};
    c.entries.push_back(e);
  }
  c.manifest.counts["news"] = n;
  return c;
}

int story_number(const std::string& prompt) {
  std::smatch m;
  std::regex re("Story (\\d+) ");
  if (!std::regex_search(prompt, m, re)) return -1;
  return std::stoi(m[1]);
}

// Guesses right for stories below `baseline_correct`, or below
// `hinted_correct` when the prompt carries a hint. The matcher always says no.
struct Harness {
  std::shared_ptr<llm::ScriptedBackend> backend = std::make_shared<llm::ScriptedBackend>();
  std::shared_ptr<llm::ResponseCache> cache = std::make_shared<llm::ResponseCache>();
  llm::Gateway gateway{backend, cache};
  std::atomic<std::size_t> match_calls = 0;
  std::set<int> failing;

  Harness(int baseline_correct = 10, int hinted_correct = 13) {
    backend->set_responder([=, this](const llm::ChatRequest& req) -> std::optional<std::string> {
      const auto& user = req.last_user_content();
      if (user.rfind("First:", 0) == 0) {
        ++match_calls;
        return "no";
      }
      const int n = story_number(user);
      if (n < 0 || failing.count(n)) return std::nullopt;
      const bool hinted = user.find("(hint:") != std::string::npos;
      const int limit = hinted ? hinted_correct : baseline_correct;
      return n < limit ? kWords[static_cast<std::size_t>(n)] + "\n" : std::string("bicycle\n");
    });
  }
};

HintMap emoji_hints(const corpus::CorpusFile& c) {
  HintMap hints;
  for (const auto& e : c.entries) hints.emplace(e.sample.id, Hint{text::parse_emoji_sequence("🔎"), e.target.span, e.target.surface});
  return hints;
}

std::size_t count_matched(const std::vector<GuessRecord>& rs) {
  std::size_t n = 0;
  for (const auto& r : rs) n += r.matched.value_or(false) ? 1 : 0;
  return n;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
  return n;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("emojinize_eval_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GuessRecord scored_record(std::string id, Condition c, ParticipantKind k, std::string who, std::string guess, bool ok) {
  GuessRecord r;
  r.item_id = std::move(id);
  r.condition = c;
  r.participant_kind = k;
  r.participant_id = std::move(who);
  r.guess = std::move(guess);
  r.matched = ok;
  r.scored_by = ScoredBy::llm;
  return r;
}

TEST(GuessRecord, JsonRoundTripKeepsFieldOrder) {
  auto r = scored_record("news-1", Condition::emojinize, ParticipantKind::llm, "gpt-4", "cat, maybe", true);
  const auto line = to_json(r).dump();
  EXPECT_EQ(line,
            R"({"item_id":"news-1","condition":"emojinize","participant_kind":"llm","participant_id":"gpt-4",)"
            R"("guess":"cat, maybe","matched":true,"scored_by":"llm"})");
  const auto back = guess_record_from_json(nlohmann::json::parse(line));
  EXPECT_EQ(to_json(back).dump(), line);

  GuessRecord unscored = r;
  unscored.matched.reset();
  unscored.scored_by.reset();
  EXPECT_NE(to_json(unscored).dump().find(R"("matched":null,"scored_by":null)"), std::string::npos);
}

TEST(GuessRecord, ValidateRejectsContradictions) {
  auto r = scored_record("a", Condition::baseline, ParticipantKind::human, "p1", "", false);
  EXPECT_THROW(r.validate(), Error);  // empty guess without blank mark
  r.blank = true;
  EXPECT_NO_THROW(r.validate());
  r.guess = "x";
  EXPECT_THROW(r.validate(), Error);

  auto half = scored_record("a", Condition::baseline, ParticipantKind::human, "p1", "x", true);
  half.scored_by.reset();
  EXPECT_THROW(half.validate(), Error);

  auto flagged = scored_record("a", Condition::baseline, ParticipantKind::llm, "m", "x", true);
  flagged.flagged = true;
  EXPECT_THROW(flagged.validate(), Error);

  GuessRecord err;
  err.item_id = "a";
  err.participant_id = "m";
  err.error = RecordError{"MissingTranslation", "none"};
  EXPECT_NO_THROW(err.validate());
  err.matched = false;
  err.scored_by = ScoredBy::exact;
  EXPECT_THROW(err.validate(), Error);
}

TEST(GuessRecord, ParseToleratesTornTail) {
  const auto good = to_json(scored_record("a", Condition::baseline, ParticipantKind::llm, "m", "x", true)).dump();
  EXPECT_EQ(parse_records(good + "\n" + good + "\n{\"item_id\":").size(), 2u);
  try {
    parse_records(good + "\nnot json\n" + good + "\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(GuessRecord, LatestSupersedesEarlierLines) {
  std::vector<GuessRecord> rs{
      scored_record("a", Condition::baseline, ParticipantKind::llm, "m", "x", false),
      scored_record("b", Condition::baseline, ParticipantKind::llm, "m", "y", false),
      scored_record("a", Condition::baseline, ParticipantKind::llm, "m", "z", true),
      scored_record("a", Condition::emojinize, ParticipantKind::llm, "m", "w", true),
  };
  const auto latest = latest_records(rs);
  ASSERT_EQ(latest.size(), 3u);
  EXPECT_EQ(latest[0].guess, "z");
  EXPECT_EQ(latest[1].item_id, "b");
  EXPECT_EQ(latest[2].condition, Condition::emojinize);
}

TEST(HumanImport, ValidatesThroughEmojiParser) {
  const auto corpus = make_corpus(3);
  const std::string a = corpus.entries[0].sample.id;
  const std::string b = corpus.entries[1].sample.id;
  const auto hints = parse_human_translations(
      R"({"sample_id":")" + a + R"(","emoji":"🎻"})" + "\n\n" + R"({"sample_id":")" + b + R"(","emoji":"⚓ 🌊"})" + "\n" +
          R"({"sample_id":")" + a + R"(","emoji":"🐈"})" + "\n",
      corpus);
  ASSERT_EQ(hints.size(), 2u);
  EXPECT_EQ(hints.at(a).emoji.text(), "🎻");
  EXPECT_EQ(hints.at(a).hidden, corpus.entries[0].target.span);
  EXPECT_EQ(hints.at(b).emoji.size(), 2u);

  try {
    parse_human_translations(R"({"sample_id":")" + a + R"(","emoji":"cat"})", corpus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonEmojiContent);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  EXPECT_THROW(parse_human_translations(R"({"sample_id":"nope","emoji":"🐈"})", corpus), Error);
  EXPECT_THROW(parse_human_translations(R"({"sample_id":")" + a + R"(","emoji":""})", corpus), Error);
}

TEST(ClozeItems, BaselineHidesTargetAndHintedUsesHintSpan) {
  const auto corpus = make_corpus(2);
  const auto& e = corpus.entries[0];
  const auto base = make_cloze_item(e, Condition::baseline, nullptr);
  EXPECT_EQ(render_cloze(base), "Story 0 says the ____ was seen near the old mill.");

  Hint mwe{text::parse_emoji_sequence("🏚️⚙️"), {}, "old mill"};
  const auto byte = e.sample.text.find("old mill");
  mwe.hidden = {byte, byte + 8};
  const auto item = make_cloze_item(e, Condition::emojinize_mwe, &mwe);
  EXPECT_EQ(render_cloze(item), "Story 0 says the violin was seen near the ____ ____ (hint: 🏚️⚙️).");

  try {
    make_cloze_item(e, Condition::emojinize, nullptr);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::MissingTranslation);
  }
}

TEST(RunCondition, BaselineYieldsOneRecordPerItem) {
  Harness h;
  const auto corpus = make_corpus();
  RunSummary summary;
  const auto rs = run_condition(corpus, Condition::baseline, nullptr, {}, h.gateway, &summary);
  ASSERT_EQ(rs.size(), 20u);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(rs[i].item_id, corpus.entries[i].sample.id);
    EXPECT_EQ(rs[i].participant_id, "gpt-4");
    EXPECT_TRUE(rs[i].scored());
    EXPECT_EQ(*rs[i].scored_by, i < 10 ? ScoredBy::exact : ScoredBy::llm);
  }
  EXPECT_EQ(count_matched(rs), 10u);
  EXPECT_EQ(summary.scored, 20u);
  // Exact matches never reach the matcher.
  EXPECT_EQ(h.match_calls, 10u);
}

TEST(RunCondition, HintsFlipThreeGuesses) {
  Harness h;
  const auto corpus = make_corpus();
  const auto hints = emoji_hints(corpus);
  const auto base = run_condition(corpus, Condition::baseline, nullptr, {}, h.gateway);
  const auto emo = run_condition(corpus, Condition::emojinize, &hints, {}, h.gateway);
  const auto a_base = accuracy(count_matched(base), base.size());
  const auto a_emo = accuracy(count_matched(emo), emo.size());
  EXPECT_DOUBLE_EQ(a_emo.accuracy - a_base.accuracy, 3.0 / 20.0);
}

TEST(RunCondition, MissingTranslationIsRecordedAndRunContinues) {
  Harness h;
  const auto corpus = make_corpus();
  auto hints = emoji_hints(corpus);
  hints.erase(corpus.entries[4].sample.id);
  RunSummary summary;
  const auto rs = run_condition(corpus, Condition::emojinize, &hints, {}, h.gateway, &summary);
  EXPECT_EQ(summary.scored, 19u);
  EXPECT_EQ(summary.errored, 1u);
  ASSERT_TRUE(rs[4].errored());
  EXPECT_EQ(rs[4].error->code, "MissingTranslation");
  EXPECT_FALSE(rs[4].scored());
}

TEST(RunCondition, GatewayFailureIsPerItem) {
  Harness h;
  h.failing = {2, 15};
  const auto corpus = make_corpus();
  RunSummary summary;
  const auto rs = run_condition(corpus, Condition::baseline, nullptr, {}, h.gateway, &summary);
  EXPECT_EQ(summary.errored, 2u);
  EXPECT_EQ(rs[2].error->code, "NoScriptMatch");
  EXPECT_TRUE(rs[3].scored());
}

TEST(RunCondition, RerunIsIdempotent) {
  TempDir dir;
  const auto path = dir.path / "baseline.jsonl";
  const auto corpus = make_corpus();
  RunOptions opts;
  opts.records_path = path;
  opts.chunk_size = 7;

  Harness first;
  const auto a = run_condition(corpus, Condition::baseline, nullptr, opts, first.gateway);
  EXPECT_EQ(line_count(path), 20u);

  Harness second;
  RunSummary summary;
  const auto b = run_condition(corpus, Condition::baseline, nullptr, opts, second.gateway, &summary);
  EXPECT_EQ(summary.reused, 20u);
  EXPECT_EQ(second.backend->calls(), 0u);
  EXPECT_EQ(serialize_records(a), serialize_records(b));
  EXPECT_EQ(line_count(path), 20u);
}

TEST(RunCondition, ResumeAddsOnlyMissingRecords) {
  TempDir dir;
  const auto path = dir.path / "baseline.jsonl";
  const auto corpus = make_corpus();
  Harness full;
  const auto reference = run_condition(corpus, Condition::baseline, nullptr, {}, full.gateway);

  // Simulate an interrupted run: five complete lines and a torn sixth.
  std::vector<GuessRecord> head(reference.begin(), reference.begin() + 5);
  {
    std::ofstream out(path, std::ios::binary);
    out << serialize_records(head) << R"({"item_id":"news-it)";
  }
  RunOptions opts;
  opts.records_path = path;
  Harness h;
  RunSummary summary;
  const auto rs = run_condition(corpus, Condition::baseline, nullptr, opts, h.gateway, &summary);
  EXPECT_EQ(summary.reused, 5u);
  EXPECT_EQ(summary.scored, 15u);
  EXPECT_EQ(line_count(path), 20u);
  EXPECT_EQ(serialize_records(rs), serialize_records(reference));
}

TEST(RunCondition, ErroredItemsAreRetried) {
  TempDir dir;
  const auto path = dir.path / "emojinize.jsonl";
  const auto corpus = make_corpus();
  auto hints = emoji_hints(corpus);
  const auto all = hints;
  hints.erase(corpus.entries[0].sample.id);
  RunOptions opts;
  opts.records_path = path;
  Harness h;
  run_condition(corpus, Condition::emojinize, &hints, opts, h.gateway);
  RunSummary summary;
  const auto rs = run_condition(corpus, Condition::emojinize, &all, opts, h.gateway, &summary);
  EXPECT_EQ(summary.reused, 19u);
  EXPECT_EQ(summary.scored, 1u);
  EXPECT_TRUE(rs[0].scored());
  EXPECT_EQ(line_count(path), 21u);
  EXPECT_EQ(latest_records(read_records(path)).size(), 20u);
}

TEST(RunCondition, DeterministicAcrossFreshGateways) {
  const auto corpus = make_corpus();
  const auto hints = emoji_hints(corpus);
  Harness a;
  Harness b;
  EXPECT_EQ(serialize_records(run_condition(corpus, Condition::emojinize, &hints, {}, a.gateway)),
            serialize_records(run_condition(corpus, Condition::emojinize, &hints, {}, b.gateway)));
}

TEST(ScoreRecords, ScoresHumanGuesses) {
  Harness h;
  std::vector<GuessRecord> rs(3);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].item_id = "item" + std::to_string(i);
    rs[i].participant_kind = ParticipantKind::human;
    rs[i].participant_id = "s1";
  }
  rs[0].guess = "Violin";
  rs[1].guess = "fiddle";
  rs[2].guess = "x";
  score_records(
      rs,
      [](const GuessRecord& r) -> std::optional<std::string> {
        if (r.item_id == "item2") return std::nullopt;
        return std::string("violin");
      },
      {}, h.gateway);
  EXPECT_TRUE(*rs[0].matched);
  EXPECT_EQ(*rs[0].scored_by, ScoredBy::exact);
  EXPECT_FALSE(*rs[1].matched);
  EXPECT_EQ(*rs[1].scored_by, ScoredBy::llm);
  EXPECT_TRUE(rs[2].errored());
  EXPECT_EQ(h.match_calls, 1u);
}

TEST(Report, AggregatesConditionsAndCorrelation) {
  ReportInputs in;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    in.records.push_back(scored_record(id, Condition::baseline, ParticipantKind::llm, "m", "g", i == 0));
    in.records.push_back(scored_record(id, Condition::emojinize, ParticipantKind::llm, "m", "g", i < 3));
    in.records.push_back(scored_record(id, Condition::emojinize, ParticipantKind::human, "p", "g", i < 2));
  }
  GuessRecord err;
  err.item_id = "s9";
  err.condition = Condition::baseline;
  err.participant_id = "m";
  err.error = RecordError{"MissingTranslation", "x"};
  in.records.push_back(err);
  in.translations["human_translation"] = {text::parse_emoji_sequence("🐈🐈"), text::parse_emoji_sequence("🐕")};
  in.bootstrap.resamples = 200;

  const auto report = build_report(in);
  ASSERT_EQ(report.accuracy.size(), 3u);
  EXPECT_EQ(report.accuracy[0].condition, Condition::baseline);
  EXPECT_EQ(report.accuracy[0].stat.trials, 4u);
  EXPECT_EQ(report.accuracy[0].errored, 1u);
  EXPECT_EQ(report.ordering, (std::vector<Condition>{Condition::emojinize, Condition::baseline}));
  EXPECT_NEAR(report.emoji_usage.at("human_translation").entropy, 0.6365141683, 1e-9);
  EXPECT_DOUBLE_EQ(report.length.at("human_translation").mean, 1.5);

  ASSERT_EQ(report.correlation.size(), 1u);
  // human (1,1,0,0) vs llm (1,1,1,0): phi = 1/sqrt(3).
  EXPECT_NEAR(*report.correlation[0].phi, 1.0 / std::sqrt(3.0), 1e-12);

  const auto j = report_to_json(report);
  EXPECT_EQ(j["accuracy"]["emojinize"]["human"]["successes"], 2);
  EXPECT_EQ(j["ordering"][0], "emojinize");
  EXPECT_EQ(j["emoji_usage"]["human_translation"]["counts"][0][0], "🐈");
  EXPECT_EQ(report_to_json(build_report(in)).dump(), j.dump());

  const auto series = accuracy_series_csv(report);
  EXPECT_NE(series.find("emojinize,llm,3,4,0.750000,"), std::string::npos);
}

TEST(Report, DegenerateCorrelationCarriesReason) {
  ReportInputs in;
  for (int i = 0; i < 3; ++i) {
    const std::string id = "s" + std::to_string(i);
    in.records.push_back(scored_record(id, Condition::baseline, ParticipantKind::llm, "m", "g", true));
    in.records.push_back(scored_record(id, Condition::baseline, ParticipantKind::human, "p", "g", i == 0));
  }
  const auto report = build_report(in);
  ASSERT_EQ(report.correlation.size(), 1u);
  EXPECT_FALSE(report.correlation[0].phi);
  EXPECT_EQ(report.correlation[0].reason, "DegenerateMargins");
  EXPECT_TRUE(report_to_json(report)["correlation"]["baseline"]["phi"].is_null());
}

TEST(Report, CsvIsSortedAndQuoted) {
  std::vector<GuessRecord> rs{
      scored_record("b", Condition::baseline, ParticipantKind::llm, "m", "plain", true),
      scored_record("a", Condition::emojinize, ParticipantKind::llm, "m", "say \"hi\", ok", false),
      scored_record("a", Condition::baseline, ParticipantKind::human, "p", "x", false),
  };
  const auto csv = records_csv(rs);
  EXPECT_EQ(csv,
            "item_id,condition,participant_kind,participant_id,guess,blank,matched,scored_by,flagged,error\n"
            "a,baseline,human,p,x,false,false,llm,false,\n"
            "a,emojinize,llm,m,\"say \"\"hi\"\", ok\",false,false,llm,false,\n"
            "b,baseline,llm,m,plain,false,true,llm,false,\n");
}

}  // namespace
}  // namespace emojinize::eval
