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

#include <cctype>

#include <filesystem>
#include <set>

#include "emojinize/corpus.hpp"
#include "emojinize/error.hpp"
#include "emojinize/llm_backends.hpp"
#include "emojinize/utf8.hpp"

namespace emojinize::corpus {
namespace {

const std::filesystem::path kSources = std::filesystem::path(EMOJINIZE_FIXTURE_DIR) / "sources";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(ExtractParagraphs, SpecExamples) {
  EXPECT_EQ(extract_paragraphs("<p>Hello</p><p>World</p>"), (std::vector<std::string>{"Hello", "World"}));
  EXPECT_EQ(extract_paragraphs("<div>skip</div><p>A &amp; B</p>"), (std::vector<std::string>{"A & B"}));
  EXPECT_EQ(extract_paragraphs("<p>x <b>y</b></p>"), (std::vector<std::string>{"x y"}));
}

TEST(ExtractParagraphs, SkipsScriptsStylesAndComments) {
  const auto out = extract_paragraphs(
      "<script>var s = '<p>no</p>';</script><style>p{}</style><!-- <p>gone</p> -->"
      "<P class=\"lead\">Keep\n   this&nbsp;one &#x1F408; &#233;</P><p></p><p>  </p>");
  EXPECT_EQ(out, (std::vector<std::string>{"Keep this one 🐈 é"}));
}

TEST(ExtractParagraphs, UnclosedParagraphsEndAtBlocks) {
  EXPECT_EQ(extract_paragraphs("<p>one<p>two<div>x</div><p>three"),
            (std::vector<std::string>{"one", "two", "three"}));
  EXPECT_EQ(extract_paragraphs("<p>a<br>b</p>"), (std::vector<std::string>{"a b"}));
}

TEST(ExtractParagraphs, NoParagraphs) {
  EXPECT_EQ(code_of([] { (void)extract_paragraphs("<div>only divs</div>"); }), ErrorCode::NoParagraphs);
  EXPECT_EQ(code_of([] { (void)extract_paragraphs(""); }), ErrorCode::NoParagraphs);
}

TEST(Entities, Decoding) {
  EXPECT_EQ(decode_entities("&lt;b&gt; &quot;q&quot; &#39; &unknown; & alone"), "<b> \"q\" ' &unknown; & alone");
  EXPECT_EQ(decode_entities("caf&eacute; &#x2014; &#0;"), "café — \xEF\xBF\xBD");
}

TEST(Ebook, StripsBoilerplateAndSplitsBlocks) {
  const auto blocks = extract_ebook_blocks(
      "Header text\r\n*** START OF THE BOOK ***\r\n\r\nFirst line\r\ncontinues _here_.\r\n\r\n\r\nSecond.\r\n"
      "*** END OF THE BOOK ***\r\nLicense");
  EXPECT_EQ(blocks, (std::vector<std::string>{"First line continues here.", "Second."}));
  EXPECT_EQ(extract_ebook_blocks("no markers\n\nat all"), (std::vector<std::string>{"no markers", "at all"}));
}

TEST(Tokenize, KindsAndOffsets) {
  const std::string text = "Don't stop, the café's 3.5 well-known cats!";
  const auto tokens = tokenize(text);
  std::vector<std::string> words;
  for (const auto& t : tokens) {
    words.push_back(t.text);
    EXPECT_EQ(utf8::substr(text, t.span.start, t.span.end), t.text);
  }
  EXPECT_EQ(words, (std::vector<std::string>{"Don't", "stop", ",", "the", "café's", "3.5", "well-known", "cats", "!"}));
  EXPECT_EQ(tokens[2].kind, TokenKind::punctuation);
  EXPECT_EQ(tokens[5].kind, TokenKind::number);
  EXPECT_TRUE(tokens[0].sentence_initial);
  EXPECT_FALSE(tokens[1].sentence_initial);
  EXPECT_EQ(word_count(text), 7u);
}

TEST(Sentences, SplitsAndKeepsAbbreviations) {
  EXPECT_EQ(split_sentences("Mr. Smith went home. He slept! Did he? Yes."),
            (std::vector<std::string>{"Mr. Smith went home.", "He slept!", "Did he?", "Yes."}));
  EXPECT_EQ(split_sentences("She said \"Stop.\" Then left."),
            (std::vector<std::string>{"She said \"Stop.\"", "Then left."}));
  EXPECT_EQ(split_sentences("J. R. Tolkien wrote it. e.g. this stays."),
            (std::vector<std::string>{"J. R. Tolkien wrote it. e.g. this stays."}));
  EXPECT_EQ(split_sentences("Pi is 3.14 exactly. Next"), (std::vector<std::string>{"Pi is 3.14 exactly.", "Next"}));
}

TEST(Passages, BoundsAndJoining) {
  PassageBounds b{4, 6};
  const auto p = passages_from_block("One two. Three four five. A b c d e f g h. Six seven eight nine.", b);
  EXPECT_EQ(p, (std::vector<std::string>{"One two. Three four five.", "Six seven eight nine."}));
  for (const auto& s : p) {
    EXPECT_GE(word_count(s), b.min_words);
    EXPECT_LE(word_count(s), b.max_words);
  }
}

TEST(Lemmas, Candidates) {
  auto has = [](std::string_view w, const std::string& lemma) {
    const auto c = lemma_candidates(w);
    return std::find(c.begin(), c.end(), lemma) != c.end();
  };
  EXPECT_TRUE(has("Cats", "cat"));
  EXPECT_TRUE(has("parties", "party"));
  EXPECT_TRUE(has("hated", "hate"));
  EXPECT_TRUE(has("stopped", "stop"));
  EXPECT_TRUE(has("running", "run"));
  EXPECT_TRUE(has("making", "make"));
  EXPECT_TRUE(has("happier", "happy"));
  EXPECT_TRUE(has("boxes", "box"));
  EXPECT_TRUE(has("dog's", "dog"));
  EXPECT_EQ(lemma_candidates("Glass").front(), "glass");
}

TEST(Profanity, Filter) {
  const WordSet lexicon{"frack", "smeg"};
  EXPECT_TRUE(profanity_filter("A clean and pleasant sentence.", lexicon).pass);
  const auto v = profanity_filter("They were fracking around again.", lexicon);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "frack");
  EXPECT_EQ(profanity_filter("Total smegs-for-brains.", lexicon).reason, "smeg");
  const auto empty = profanity_filter("", lexicon);
  EXPECT_FALSE(empty.pass);
  EXPECT_EQ(empty.reason, "empty");
  EXPECT_FALSE(profanity_filter(" ... ", lexicon).pass);
}

TEST(Profanity, BundledLexiconLoads) {
  EXPECT_GT(bundled_profanity().size(), 20u);
  EXPECT_FALSE(profanity_filter("You damned fool.", bundled_profanity()).pass);
  EXPECT_TRUE(profanity_filter("The hikers returned safely.", bundled_profanity()).pass);
}

struct Harness {
  std::shared_ptr<llm::ScriptedBackend> backend = std::make_shared<llm::ScriptedBackend>();
  llm::Gateway gateway{backend, std::make_shared<llm::ResponseCache>()};
};

constexpr const char* kClear = R"({"spam":false,"non_english":false,"formatting":false,"violent_or_sexual":false})";

TEST(QualityFilter, Verdicts) {
  Harness h;
  h.backend->on_user("newsletter", {R"({"spam":true,"non_english":false,"formatting":false,"violent_or_sexual":false})"});
  h.backend->on_user("Bonjour", {R"({"spam":false,"non_english":true,"formatting":false,"violent_or_sexual":false})"});
  h.backend->on_user("", {kClear});
  const QualityFilterConfig cfg;
  const auto spam = llm_quality_filter("Subscribe to our newsletter for updates!", cfg, h.gateway);
  EXPECT_FALSE(spam.pass);
  EXPECT_EQ(spam.reason, "spam");
  const auto fr = llm_quality_filter("Bonjour tout le monde.", cfg, h.gateway);
  EXPECT_EQ(fr.reason, "non_english");
  EXPECT_TRUE(llm_quality_filter("The hikers returned safely.", cfg, h.gateway).pass);
}

TEST(QualityFilter, UnparseableVerdictsExhaust) {
  Harness h;
  h.backend->on_user("", {"looks fine to me", R"({"spam":false})"});
  QualityFilterConfig cfg;
  cfg.max_resamples = 2;
  const auto v = llm_quality_filter("The hikers returned safely.", cfg, h.gateway);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "unverifiable");
  EXPECT_EQ(h.backend->calls(), 2u);
}

TEST(QualityFilter, PromptNamesCategories) {
  const auto req = build_quality_request("x", QualityFilterConfig{});
  req.validate();
  for (auto cat : kQualityCategories) EXPECT_NE(req.system_content().find(cat), std::string::npos) << cat;
}

TEST(LexiconTagger, Classes) {
  LexiconTagger tagger;
  const std::string text = "The cats quickly chased Maria's ball near Paris. NASA launched happily.";
  const auto tokens = tokenize(text);
  const auto tags = tagger.tag(text, tokens);
  std::map<std::string, WordClass> by_word;
  for (std::size_t i = 0; i < tokens.size(); ++i) by_word[tokens[i].text] = tags[i];
  EXPECT_EQ(by_word["cats"], WordClass::noun);
  EXPECT_EQ(by_word["quickly"], WordClass::adverb);
  EXPECT_EQ(by_word["chased"], WordClass::verb);
  EXPECT_EQ(by_word["Maria's"], WordClass::proper_noun);
  EXPECT_EQ(by_word["Paris"], WordClass::proper_noun);
  EXPECT_EQ(by_word["NASA"], WordClass::proper_noun);
  EXPECT_EQ(by_word["."], WordClass::other);
  EXPECT_FALSE(tagger.version().empty());
}

TEST(LlmTagger, ParsesAndResamples) {
  Harness h;
  h.backend->on_user("[\"The\",\"cat\",\"sat\"]", {"nope", R"({"tags":["other","noun","verb"]})"});
  LlmTagger tagger(h.gateway, "tagger-model");
  const std::string text = "The cat sat.";
  const auto tokens = tokenize(text);
  const auto tags = tagger.tag(text, tokens);
  EXPECT_EQ(tags, (std::vector<WordClass>{WordClass::other, WordClass::noun, WordClass::verb, WordClass::other}));
  EXPECT_EQ(h.backend->calls(), 2u);
}

std::string detail_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

TextSample sample(std::string text) { return TextSample{"t-1", std::move(text), SourceKind::news, "x"}; }

TEST(SelectTarget, ExclusionRules) {
  LexiconTagger tagger;
  std::set<std::string> chosen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto t = select_target_word(sample("The cat sat."), seed, tagger, bundled_stopwords());
    chosen.insert(t.surface);
    EXPECT_TRUE(t.word_class == WordClass::noun || t.word_class == WordClass::verb);
  }
  EXPECT_EQ(chosen, (std::set<std::string>{"cat", "sat"}));

  const auto big = select_target_word(sample("Paris is big."), 1, tagger, bundled_stopwords());
  EXPECT_EQ(big.surface, "big");
  EXPECT_EQ(big.word_class, WordClass::adjective);
  EXPECT_EQ(big.span, (Span{9, 12}));
}

TEST(SelectTarget, RepeatedWordsAreNotEligible) {
  LexiconTagger tagger;
  const auto eligible = eligible_targets(sample("The cat saw another Cat near the barn."), tagger, bundled_stopwords());
  for (const auto& t : eligible) EXPECT_NE(detail_lower(t.surface), "cat");
  EXPECT_FALSE(eligible.empty());
}

TEST(SelectTarget, DeterministicPerSeed) {
  LexiconTagger tagger;
  const auto s = sample("Gardeners across the region are watering their vegetables at dawn to cope with heat.");
  const auto a = select_target_word(s, 1234, tagger, bundled_stopwords());
  const auto b = select_target_word(s, 1234, tagger, bundled_stopwords());
  EXPECT_EQ(a.span, b.span);
  EXPECT_EQ(a.surface, b.surface);
}

TEST(SelectTarget, NoEligibleToken) {
  LexiconTagger tagger;
  EXPECT_EQ(code_of([&] { (void)select_target_word(sample("It is what it is, 42."), 0, tagger, bundled_stopwords()); }),
            ErrorCode::NoEligibleToken);
}

CorpusConfig fixture_config() {
  CorpusConfig c;
  c.sources = {{SourceKind::news, kSources / "news", 10}, {SourceKind::ebook, kSources / "ebooks", 10}};
  c.seed = 7;
  return c;
}

TEST(BuildCorpus, FixtureSources) {
  LexiconTagger tagger;
  const auto corpus = build_corpus(fixture_config(), tagger, nullptr);
  ASSERT_EQ(corpus.entries.size(), 20u);
  EXPECT_EQ(corpus.manifest.counts.at("news"), 10u);
  EXPECT_EQ(corpus.manifest.counts.at("ebook"), 10u);
  std::set<std::string> ids;
  for (const auto& e : corpus.entries) {
    ids.insert(e.sample.id);
    EXPECT_EQ(utf8::substr(e.sample.text, e.target.span.start, e.target.span.end), e.target.surface);
    EXPECT_TRUE(profanity_filter(e.sample.text, bundled_profanity()).pass);
    EXPECT_TRUE(is_content_class(e.target.word_class));
    EXPECT_EQ(bundled_stopwords().count(e.target.surface), 0u);
    const auto words = word_count(e.sample.text);
    EXPECT_GE(words, 8u);
    EXPECT_LE(words, 60u);
  }
  EXPECT_EQ(ids.size(), 20u);
  // Interleaved by the final shuffle rather than grouped by source.
  bool mixed = false;
  for (std::size_t i = 0; i < 10; ++i) mixed = mixed || corpus.entries[i].sample.source_kind == SourceKind::ebook;
  EXPECT_TRUE(mixed);
}

TEST(BuildCorpus, DeterministicAndRoundTrips) {
  LexiconTagger tagger;
  const auto a = serialize_corpus(build_corpus(fixture_config(), tagger, nullptr));
  const auto b = serialize_corpus(build_corpus(fixture_config(), tagger, nullptr));
  EXPECT_EQ(a, b);
  const auto parsed = parse_corpus(a);
  EXPECT_EQ(serialize_corpus(parsed), a);
  auto other = fixture_config();
  other.seed = 8;
  EXPECT_NE(serialize_corpus(build_corpus(other, tagger, nullptr)), a);
}

TEST(BuildCorpus, QualityFilterRejectsFlaggedText) {
  Harness h;
  h.backend->on_user("newsletter", {R"({"spam":true,"non_english":false,"formatting":false,"violent_or_sexual":false})"});
  h.backend->on_user("Wetter", {R"({"spam":false,"non_english":true,"formatting":false,"violent_or_sexual":false})"});
  h.backend->on_user("", {kClear});
  auto cfg = fixture_config();
  cfg.sources[0].count = 14;
  cfg.quality = QualityFilterConfig{};
  LexiconTagger tagger;
  const auto corpus = build_corpus(cfg, tagger, &h.gateway);
  for (const auto& e : corpus.entries) {
    EXPECT_EQ(e.sample.text.find("newsletter"), std::string::npos);
    EXPECT_EQ(e.sample.text.find("Wetter"), std::string::npos);
  }
  const auto& rejected = corpus.manifest.settings["rejected"];
  EXPECT_EQ(rejected.value("profanity", 0), 1);
  EXPECT_EQ(rejected.value("quality:spam", 0), 1);
  EXPECT_EQ(rejected.value("quality:non_english", 0), 1);
}

TEST(BuildCorpus, InsufficientCleanSamples) {
  auto cfg = fixture_config();
  cfg.sources[1].count = 50;
  LexiconTagger tagger;
  EXPECT_EQ(code_of([&] { (void)build_corpus(cfg, tagger, nullptr); }), ErrorCode::InsufficientCleanSamples);
  cfg = fixture_config();
  cfg.profanity = WordSet{"the", "a", "and"};
  EXPECT_EQ(code_of([&] { (void)build_corpus(cfg, tagger, nullptr); }), ErrorCode::InsufficientCleanSamples);
}

TEST(CorpusFile, ManifestCountsAreChecked) {
  LexiconTagger tagger;
  auto text = serialize_corpus(build_corpus(fixture_config(), tagger, nullptr));
  text = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_EQ(code_of([&] { (void)parse_corpus(text); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { (void)read_corpus("/nonexistent/corpus.jsonl"); }), ErrorCode::MissingStageInput);
}

}  // namespace
}  // namespace emojinize::corpus
