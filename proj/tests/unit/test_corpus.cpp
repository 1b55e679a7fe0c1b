#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "s2t/corpus.hpp"
#include "test_support.hpp"

namespace s2t::corpus {
namespace {

using Tokens = std::vector<std::string>;

TEST(Normalize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(normalize_and_tokenize("Hello, World!"), (Tokens{"hello", "world"}));
  EXPECT_EQ(normalize_and_tokenize("I'm calling from New York."), (Tokens{"i'm", "calling", "from", "new", "york"}));
  EXPECT_TRUE(normalize_and_tokenize("").empty());
  EXPECT_EQ(normalize_and_tokenize("  'quoted'  well-known  "), (Tokens{"quoted", "wellknown"}));
  EXPECT_EQ(normalize_and_tokenize("don’t"), (Tokens{"don't"}));
}

TEST(Vocab, IdsFollowCountsThenLexicographicOrder) {
  const auto v = Vocabulary::build({{"a", "a", "b"}}, 1, Level::word);
  EXPECT_EQ(v.size(), 6);
  EXPECT_LT(v.id("a"), v.id("b"));
  EXPECT_EQ(v.id("a"), 4);
  const auto w = Vocabulary::build({{"z", "y", "x", "y"}}, 1, Level::word);
  EXPECT_EQ(w.id("y"), 4);
  EXPECT_EQ(w.id("x"), 5);
  EXPECT_EQ(w.id("z"), 6);
  EXPECT_EQ(w, Vocabulary::build({{"z", "y", "x", "y"}}, 1, Level::word));
}

TEST(Vocab, MinCountMapsRareTokensToUnk) {
  const auto v = Vocabulary::build({{"a", "a", "b"}}, 2, Level::word);
  EXPECT_EQ(v.size(), 5);
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.encode({"a", "b"}), (std::vector<int>{v.id("a"), Vocabulary::kUnk, Vocabulary::kEos}));
}

TEST(Vocab, EmptyCorpusIsAnError) {
  EXPECT_THROW(Vocabulary::build({}, 1, Level::word), InvalidArgument);
  EXPECT_THROW(Vocabulary::build({{}}, 1, Level::word), InvalidArgument);
}

TEST(Vocab, SpecialsAreFixed) {
  const auto v = Vocabulary::build({{"x"}}, 1, Level::word);
  EXPECT_EQ(v.id("<pad>"), Vocabulary::kUnk);  // specials never resolve by name
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(1), "<s>");
  EXPECT_EQ(v.token(2), "</s>");
  EXPECT_EQ(v.token(3), "<unk>");
}

TEST(Encode, WordAndCharacterLevels) {
  const auto w = Vocabulary::build({{"hello", "world"}}, 1, Level::word);
  EXPECT_EQ(encode_target({"hello", "world"}, w), (std::vector<int>{w.id("hello"), w.id("world"), Vocabulary::kEos}));
  EXPECT_EQ(encode_target({"hello", "mars"}, w)[1], Vocabulary::kUnk);

  const auto c = Vocabulary::build({{"hi", "yo"}}, 1, Level::character);
  const auto sp = std::string(Vocabulary::kSpace);
  EXPECT_EQ(encode_target({"hi", "yo"}, c),
            (std::vector<int>{c.id("h"), c.id("i"), c.id(sp), c.id("y"), c.id("o"), Vocabulary::kEos}));
  EXPECT_EQ(c.decode(encode_target({"hi", "yo"}, c)), (Tokens{"hi", "yo"}));
}

TEST(Encode, RoundTripsInVocabularySequences) {
  const auto synth = synth_corpus({});
  std::vector<Tokens> seqs;
  for (const auto& u : synth.utts) seqs.push_back(u.translations[0]);
  for (Level level : {Level::word, Level::character}) {
    const auto v = Vocabulary::build(seqs, 1, level);
    for (const auto& s : seqs) EXPECT_EQ(v.decode(v.encode(s)), s);
  }
}

TEST(Encode, CharacterTargetsAreAtLeastFourTimesLonger) {
  const auto synth = synth_corpus({});
  std::vector<Tokens> seqs;
  for (const auto& u : synth.utts) seqs.push_back(u.translations[0]);
  const auto w = Vocabulary::build(seqs, 1, Level::word);
  const auto c = Vocabulary::build(seqs, 1, Level::character);
  size_t wl = 0, cl = 0;
  for (const auto& s : seqs) {
    wl += w.encode(s).size() - 1;
    cl += c.encode(s).size() - 1;
  }
  EXPECT_GE(static_cast<double>(cl) / static_cast<double>(wl), 4.0);
}

TEST(VocabFile, LineNumberIsIdMinusFour) {
  testing::TempDir dir("vocab");
  const auto v = Vocabulary::build({{"b", "a", "a", "c", "c", "c"}}, 1, Level::word);
  v.save(dir / "v.txt");
  std::ifstream in(dir / "v.txt");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(v.id(line), n + 4);
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_EQ(Vocabulary::load(dir / "v.txt", Level::word), v);
}

TEST(Bucket, ClosedFormAndCaps) {
  EXPECT_EQ(assign_bucket(25), (BucketAssignment{0, 25}));
  EXPECT_EQ(assign_bucket(26), (BucketAssignment{1, 26}));
  EXPECT_EQ(assign_bucket(2300), (BucketAssignment{79, 2000}));
  EXPECT_EQ(assign_bucket(1600, Level::character), (BucketAssignment{59, 1500}));
  int prev = 0;
  for (int n = 1; n <= 2500; ++n) {
    const auto b = assign_bucket(n);
    ASSERT_GE(b.bucket_id, prev);
    ASSERT_LE(b.bucket_id, 79);
    prev = b.bucket_id;
  }
}

std::vector<Example> examples_with_frames(const std::vector<int>& frames, int mels = 3) {
  std::vector<Example> out;
  std::mt19937_64 rng(5);
  for (size_t i = 0; i < frames.size(); ++i) {
    Example ex;
    ex.utt.id = "e" + std::to_string(i);
    ex.feats = testing::random_features(frames[i], mels, rng);
    ex.utt.n_frames = frames[i];
    ex.target = std::vector<int>(1 + i % 3, 4);
    ex.target.push_back(Vocabulary::kEos);
    out.push_back(ex);
  }
  return out;
}

TEST(Batching, OneBucketSplitsIntoSixtyFourSixtyFourTwo) {
  const auto ex = examples_with_frames(std::vector<int>(130, 20));
  const auto batches = make_batches(ex, 64, 1);
  std::vector<int> sizes;
  for (const auto& b : batches) sizes.push_back(b.batch_size);
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<int>{2, 64, 64}));
}

TEST(Batching, PartitionsInputAndPadsConsistently) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(1, 300);
  std::vector<int> frames;
  for (int i = 0; i < 200; ++i) frames.push_back(len(rng));
  const auto ex = examples_with_frames(frames);
  const auto batches = make_batches(ex, 16, 42);
  std::multiset<size_t> seen;
  for (const auto& b : batches) {
    ASSERT_LE(b.batch_size, 16);
    std::set<int> buckets;
    for (int r = 0; r < b.batch_size; ++r) {
      const size_t src = b.source_index[static_cast<size_t>(r)];
      seen.insert(src);
      buckets.insert(assign_bucket(ex[src].feats.n_frames).bucket_id);
      ASSERT_LE(b.feature_lengths[r], b.max_frames);
      ASSERT_LE(b.target_lengths[r], b.max_target);
      for (int t = b.feature_lengths[r]; t < b.max_frames; ++t) {
        for (int m = 0; m < b.n_mels; ++m) ASSERT_EQ(b.feature(r, t, m), 0.0f);
      }
      for (int l = b.target_lengths[r]; l < b.max_target; ++l) ASSERT_EQ(b.target(r, l), Vocabulary::kPad);
      ASSERT_EQ(b.feature(r, 0, 1), ex[src].feats.at(0, 1));
    }
    EXPECT_EQ(buckets.size(), 1u);
  }
  std::multiset<size_t> want;
  for (size_t i = 0; i < ex.size(); ++i) want.insert(i);
  EXPECT_EQ(seen, want);
}

TEST(Batching, SeedDeterminesCompositionAndOrder) {
  const auto ex = examples_with_frames(std::vector<int>(50, 30));
  auto ids = [](const std::vector<Batch>& bs) {
    std::vector<std::vector<size_t>> out;
    for (const auto& b : bs) out.push_back(b.source_index);
    return out;
  };
  EXPECT_EQ(ids(make_batches(ex, 8, 3)), ids(make_batches(ex, 8, 3)));
  EXPECT_NE(ids(make_batches(ex, 8, 3)), ids(make_batches(ex, 8, 4)));
  EXPECT_TRUE(make_batches({}, 8, 3).empty());
}

TEST(Batching, TruncatesToTheLevelCap) {
  const auto ex = examples_with_frames({2300});
  const auto b = make_batch(ex, {0}, Level::word);
  EXPECT_EQ(b.max_frames, 2000);
  EXPECT_EQ(make_batch(ex, {0}, Level::character).max_frames, 1500);
}

std::vector<Utterance> equal_utts(int n, int frames) {
  std::vector<Utterance> out;
  for (int i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i), "", frames, {{"x"}}});
  return out;
}

TEST(Subset, HalfHourOfThirtySixSecondUtterances) {
  const auto utts = equal_utts(100, 3600);
  EXPECT_EQ(sample_subset(utts, {0.5, 7, true}).size(), 50u);
}

TEST(Subset, FullCorpusIsAPermutation) {
  const auto utts = equal_utts(30, 100);
  auto idx = sample_subset(utts, {corpus_hours(utts), 7, true});
  std::sort(idx.begin(), idx.end());
  ASSERT_EQ(idx.size(), 30u);
  for (size_t i = 0; i < 30; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Subset, NestedSubsetsArePrefixes) {
  std::vector<Utterance> utts;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(50, 500);
  for (int i = 0; i < 300; ++i) utts.push_back({"u" + std::to_string(i), "", len(rng), {{"x"}}});
  const double total = corpus_hours(utts);
  const auto small = sample_subset(utts, {0.2 * total, 11, true});
  const auto large = sample_subset(utts, {0.5 * total, 11, true});
  ASSERT_LT(small.size(), large.size());
  EXPECT_TRUE(std::equal(small.begin(), small.end(), large.begin()));
  EXPECT_THROW(sample_subset(utts, {total * 1.01, 11, true}), InvalidArgument);
  EXPECT_THROW(sample_subset(utts, {0.0, 11, true}), InvalidArgument);
}

TEST(Manifest, RoundTrips) {
  testing::TempDir dir("manifest");
  std::vector<Utterance> utts = {{"a", "f/a.fbk", 12, {{"hello", "there"}, {"hi"}}}, {"b", "f/b.fbk", 3, {{"ok"}}}};
  write_manifest(dir / "m.jsonl", utts);
  const auto back = read_manifest(dir / "m.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].translations, utts[0].translations);
  EXPECT_EQ(back[1].n_frames, 3);
  std::ofstream(dir / "bad.jsonl") << "{\"id\": \"x\"}\n";
  EXPECT_THROW(read_manifest(dir / "bad.jsonl"), FormatError);
}

TEST(Synth, DeterministicAndConcatenative) {
  const auto a = synth_corpus({});
  const auto b = synth_corpus({});
  ASSERT_EQ(a.utts.size(), 50u);
  EXPECT_EQ(a.words.size(), 30u);
  for (size_t i = 0; i < a.utts.size(); ++i) {
    EXPECT_EQ(a.feats[i], b.feats[i]);
    EXPECT_EQ(a.utts[i].translations, b.utts[i].translations);
    int frames = 0;
    for (const auto& w : a.utts[i].translations[0]) {
      const auto it = std::find(a.words.begin(), a.words.end(), w);
      frames += a.signatures[static_cast<size_t>(it - a.words.begin())].n_frames;
    }
    EXPECT_EQ(a.feats[i].n_frames, frames);
    EXPECT_EQ(a.utts[i].n_frames, frames);
    const auto n = a.utts[i].translations[0].size();
    EXPECT_GE(n, 2u);
    EXPECT_LE(n, 6u);
  }
}

TEST(Synth, SignaturesArePairwiseDistinct) {
  const auto s = synth_corpus({});
  double min_dist = 1e30;
  for (size_t i = 0; i < s.signatures.size(); ++i) {
    for (size_t j = i + 1; j < s.signatures.size(); ++j) {
      const auto& a = s.signatures[i];
      const auto& b = s.signatures[j];
      const int frames = std::min(a.n_frames, b.n_frames);
      double d = std::abs(a.n_frames - b.n_frames);
      for (int t = 0; t < frames; ++t) {
        for (int m = 0; m < a.n_mels; ++m) d += std::abs(a.at(t, m) - b.at(t, m));
      }
      min_dist = std::min(min_dist, d);
    }
  }
  EXPECT_GT(min_dist, 0.0);
}

}  // namespace
}  // namespace s2t::corpus
