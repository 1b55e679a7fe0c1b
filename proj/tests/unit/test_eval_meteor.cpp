#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "s2t/common.hpp"
#include "s2t/eval.hpp"
#include "test_support.hpp"

namespace s2t::eval {
namespace {

using oracle::brute_force;
using oracle::eat_feed;

TEST(Porter, KnownStems) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"bothering", "bother"}, {"cats", "cat"},        {"run", "run"},
      {"running", "run"},      {"caresses", "caress"}, {"ponies", "poni"},
      {"feed", "feed"},        {"agreed", "agre"},     {"plastered", "plaster"},
      {"motoring", "motor"},   {"sing", "sing"},       {"hopping", "hop"},
      {"falling", "fall"},     {"filing", "file"},     {"happy", "happi"},
      {"sky", "sky"},          {"relational", "relat"}, {"conditional", "condit"},
      {"hopefulness", "hope"}, {"goodness", "good"},   {"adjustment", "adjust"},
      {"communism", "commun"}, {"effective", "effect"}, {"electrical", "electr"},
      {"generalizations", "gener"}, {"oscillators", "oscil"}, {"a", "a"},
      {"is", "is"},            {"Cats", "Cats"},       {"don't", "don't"},
  };
  for (const auto& [word, stem] : cases) EXPECT_EQ(porter_stem(word), stem) << word;
}

TEST(Align, IdenticalSentenceIsOneChunk) {
  const Tokens s = {"we", "will", "see", "you", "there", "soon"};
  const auto a = align_matches(s, s);
  EXPECT_EQ(a.pairs.size(), 6u);
  EXPECT_EQ(a.chunks, 1);
  EXPECT_EQ(a.crossings, 0);
  for (const auto& p : a.pairs) EXPECT_EQ(p.stage, Stage::exact);
}

TEST(Align, SwappedPairIsTwoChunks) {
  const auto a = align_matches({"a", "b"}, {"b", "a"});
  EXPECT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.chunks, 2);
  EXPECT_EQ(a.crossings, 1);
}

TEST(Align, SynonymStage) {
  const auto r = eat_feed();
  const auto a = align_matches({"eat"}, {"feed"}, r);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].stage, Stage::synonym);
  AlignOptions no_syn;
  no_syn.use_synonym = false;
  EXPECT_TRUE(align_matches({"eat"}, {"feed"}, r, no_syn).pairs.empty());
  EXPECT_TRUE(align_matches({"eat"}, {"feed"}).pairs.empty());
}

TEST(Align, EarlierStagesWin) {
  MatchResources r;
  r.synonyms.add_group({"cats", "cat"});
  const auto a = align_matches({"cats"}, {"cat"}, r);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].stage, Stage::stem);
}

TEST(Align, PrefersFewerChunks) {
  // "the" could align to either occurrence; the second keeps one chunk.
  const auto a = align_matches({"the", "cat"}, {"the", "big", "the", "cat"});
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0].ref, 2);
  EXPECT_EQ(a.chunks, 1);
}

TEST(Align, BudgetExhaustionKeepsMaximumCardinality) {
  Tokens h, r;
  for (int i = 0; i < 12; ++i) {
    h.push_back(i % 2 ? "x" : "y");
    r.push_back(i % 3 ? "x" : "y");
  }
  AlignOptions tight;
  tight.node_budget = 5;
  const auto a = align_matches(h, r, {}, tight);
  const auto full = align_matches(h, r);
  EXPECT_FALSE(a.exhaustive);
  EXPECT_TRUE(full.exhaustive);
  EXPECT_EQ(a.pairs.size(), full.pairs.size());
  EXPECT_GE(a.chunks, full.chunks);
}

TEST(Align, MatchesBruteForceOracle) {
  const std::vector<std::string> words = {"cat", "cats", "dog", "eat", "feed", "run", "running", "the", "a"};
  MatchResources res = eat_feed();
  res.paraphrases.add_group({"dog", "a"});
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(0, 7), w(0, static_cast<int>(words.size()) - 1);
  for (int trial = 0; trial < 500; ++trial) {
    Tokens h, r;
    for (int k = len(rng); k > 0; --k) h.push_back(words[static_cast<size_t>(w(rng))]);
    for (int k = len(rng); k > 0; --k) r.push_back(words[static_cast<size_t>(w(rng))]);
    const auto got = align_matches(h, r, res);
    const auto want = brute_force(h, r, res);
    ASSERT_TRUE(got.exhaustive);
    ASSERT_EQ(got.pairs.size(), want.cardinality) << trial;
    ASSERT_EQ(got.chunks, want.chunks) << trial;
    ASSERT_EQ(got.crossings, want.crossings) << trial;
    ASSERT_EQ(count_chunks(got.pairs), got.chunks);
    std::vector<char> hu(h.size(), 0), ru(r.size(), 0);
    for (const auto& p : got.pairs) {
      ASSERT_FALSE(hu[static_cast<size_t>(p.hyp)]++);
      ASSERT_FALSE(ru[static_cast<size_t>(p.ref)]++);
    }
  }
}

TEST(Meteor, IdenticalSixWordPair) {
  const Tokens s = {"we", "will", "see", "you", "there", "soon"};
  const auto m = meteor_score({s}, {{s}});
  EXPECT_NEAR(m.precision, 1.0, 1e-12);
  EXPECT_NEAR(m.recall, 1.0, 1e-12);
  EXPECT_NEAR(m.fmean, 1.0, 1e-12);
  EXPECT_NEAR(m.fragmentation, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.score, 1.0 - 0.6 * std::pow(1.0 / 6.0, 0.2), 1e-6);
}

TEST(Meteor, NoMatchesScoreZero) {
  const auto m = meteor_score({{"x", "y"}}, {{{"a", "b"}}});
  EXPECT_EQ(m.score, 0.0);
  EXPECT_EQ(m.matches, 0);
  EXPECT_EQ(m.fragmentation, 0.0);
}

TEST(Meteor, EatFeedRecall) {
  const auto r = eat_feed();
  EXPECT_NEAR(unigram_recall({{"eat"}}, {{{"eat"}}}, r), 1.0, 1e-12);
  EXPECT_NEAR(unigram_recall({{"eat"}}, {{{"feed"}}}, r), 0.8, 1e-12);
  EXPECT_EQ(unigram_recall({{"eat"}}, {{{"feed"}}}, r, StageWeights::exact_only()), 0.0);
  EXPECT_NEAR(meteor_score({{"eat"}}, {{{"feed"}}}, r).recall, 0.8, 1e-12);
}

TEST(Meteor, HandEvaluatedMixedStages) {
  // hyp: the cats eat fish ; ref: the cat will feed fish
  // matches: the(exact) cats~cat(stem 0.6) eat~feed(synonym 0.8) fish(exact)
  // m_w = 3.4, P = 3.4/4, R = 3.4/5; chunks: [the cats] [eat fish] = 2
  const auto r = eat_feed();
  const auto m = meteor_score({{"the", "cats", "eat", "fish"}}, {{{"the", "cat", "will", "feed", "fish"}}}, r);
  const double p = 3.4 / 4.0, rc = 3.4 / 5.0;
  const double f = p * rc / (0.85 * p + 0.15 * rc);
  const double pen = 0.6 * std::pow(2.0 / 4.0, 0.2);
  EXPECT_EQ(m.matches, 4);
  EXPECT_EQ(m.chunks, 2);
  EXPECT_NEAR(m.weighted_matches, 3.4, 1e-12);
  EXPECT_NEAR(m.precision, p, 1e-12);
  EXPECT_NEAR(m.recall, rc, 1e-12);
  EXPECT_NEAR(m.score, f * (1.0 - pen), 1e-6);
}

TEST(Meteor, BestReferenceAndCorpusTotals) {
  // utt 0 scores best against its second reference; totals then combine
  // utt 0 (m=2, chunks=1, |h|=2, |r|=2) and utt 1 (m=1, chunks=1, |h|=3, |r|=1).
  const std::vector<Tokens> hyps = {{"a", "b"}, {"c", "d", "e"}};
  const ReferenceSet refs = {{{"a", "x", "y"}, {"a", "b"}}, {{"e"}}};
  const auto m = meteor_score(hyps, refs);
  const auto want = meteor_from_totals(3.0, 3, 2, 5, 3, {});
  EXPECT_EQ(m.matches, 3);
  EXPECT_EQ(m.chunks, 2);
  EXPECT_EQ(m.hyp_length, 5);
  EXPECT_EQ(m.ref_length, 3);
  EXPECT_NEAR(m.score, want.score, 1e-15);
}

TEST(Meteor, AlphaLimitsWithoutPenalty) {
  // F = P R / (alpha P + (1 - alpha) R): alpha -> 1 leaves R, alpha -> 0 leaves P.
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> len(1, 8), w(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tokens> hyps;
    ReferenceSet refs;
    for (int u = 0; u < 4; ++u) {
      Tokens h, r;
      for (int k = len(rng); k > 0; --k) h.push_back("w" + std::to_string(w(rng)));
      for (int k = len(rng); k > 0; --k) r.push_back("w" + std::to_string(w(rng)));
      hyps.push_back(h);
      refs.push_back({r});
    }
    bool any = false;
    for (size_t u = 0; u < hyps.size(); ++u) any = any || !align_matches(hyps[u], refs[u][0]).pairs.empty();
    if (!any) continue;
    MeteorParams p;
    p.gamma = 0.0;
    p.weights = StageWeights::exact_only();
    p.alpha = 1.0 - 1e-9;
    EXPECT_NEAR(meteor_score(hyps, refs, {}, p).score, unigram_recall(hyps, refs, {}, StageWeights::exact_only()), 1e-6);
    p.alpha = 1e-9;
    EXPECT_NEAR(meteor_score(hyps, refs, {}, p).score, unigram_precision(hyps, refs), 1e-6);
  }
}

TEST(Meteor, ParameterAndInputValidation) {
  MeteorParams p;
  p.alpha = 1.5;
  EXPECT_THROW(meteor_score({{"a"}}, {{{"a"}}}, {}, p), InvalidArgument);
  p = {};
  p.weights.stem = 2.0;
  EXPECT_THROW(meteor_score({{"a"}}, {{{"a"}}}, {}, p), InvalidArgument);
  EXPECT_THROW(meteor_score({{"a"}}, {{Tokens{}}}), InvalidArgument);
  EXPECT_THROW(meteor_score({{"a"}}, {}), InvalidArgument);
}

TEST(EquivalenceTable, LoadsTabSeparatedGroups) {
  testing::TempDir dir("syn");
  std::ofstream(dir / "syn.txt") << "# comment\neat\tfeed\tdine\n\nbig\tlarge\r\nsingle\n";
  const auto t = EquivalenceTable::load(dir / "syn.txt");
  EXPECT_TRUE(t.equivalent("eat", "dine"));
  EXPECT_TRUE(t.equivalent("large", "big"));
  EXPECT_FALSE(t.equivalent("eat", "big"));
  EXPECT_FALSE(t.equivalent("single", "single"));
  EXPECT_FALSE(t.empty());
  EXPECT_THROW(EquivalenceTable::load(dir / "none.txt"), Error);
}

}  // namespace
}  // namespace s2t::eval
