#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "s2t/train.hpp"
#include "test_support.hpp"

namespace s2t::train {
namespace {

using corpus::Vocabulary;

std::string bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Data {
  corpus::SynthCorpus synth;
  Vocabulary vocab;
  std::vector<corpus::Example> examples;
};

Data small_data(corpus::Level level = corpus::Level::word, int n_utts = 10) {
  corpus::SynthConfig sc;
  sc.n_utts = n_utts;
  sc.vocab_size = 6;
  sc.n_mels = 8;
  sc.min_words = 1;
  sc.max_words = 3;
  sc.min_signature_frames = 4;
  sc.max_signature_frames = 6;
  sc.seed = 11;
  Data d;
  d.synth = corpus::synth_corpus(sc);
  std::vector<std::vector<std::string>> targets;
  for (const auto& u : d.synth.utts) targets.push_back(u.translations[0]);
  d.vocab = Vocabulary::build(targets, 1, level);
  d.examples = corpus::make_examples(d.synth.utts, d.synth.feats, d.vocab);
  return d;
}

model::ModelConfig small_model() {
  auto c = testing::tiny_config(8, 0);
  c.cnn_filters = 3;
  c.enc_hidden = 6;
  c.dec_hidden = 10;
  c.emb_dim = 6;
  c.beam = 3;
  return c;
}

TrainConfig fast_tc(int epochs) {
  TrainConfig tc;
  tc.max_epochs = epochs;
  tc.patience = epochs;
  tc.lr = 5e-3;
  tc.seed = 4;
  tc.eval_mode = infer::Mode::greedy;
  tc.eval_max_len = 6;
  return tc;
}

TEST(TrainConfig, Validation) {
  TrainConfig tc;
  EXPECT_NO_THROW(tc.validate());
  tc.max_epochs = 0;
  EXPECT_THROW(tc.validate(), InvalidArgument);
  tc = {};
  tc.patience = 0;
  EXPECT_THROW(tc.validate(), InvalidArgument);
  tc = {};
  tc.lr = 0.0;
  EXPECT_THROW(tc.validate(), InvalidArgument);
}

TEST(TrainLoop, LossDecreasesOverFirstEpochs) {
  const auto d = small_data();
  const auto res = train_loop(d.examples, d.examples, d.vocab, small_model(), fast_tc(5));
  ASSERT_EQ(res.log.epochs.size(), 5u);
  EXPECT_LT(res.log.epochs.back().loss, res.log.epochs.front().loss);
  for (const auto& e : res.log.epochs) {
    EXPECT_TRUE(std::isfinite(e.loss));
    EXPECT_GE(e.token_accuracy, 0.0);
    EXPECT_LE(e.token_accuracy, 1.0);
    EXPECT_GE(e.dev_bleu, 0.0);
  }
  EXPECT_FALSE(res.log.diverged);
  EXPECT_EQ(res.best.config.vocab_size, d.vocab.size());
}

TEST(TrainLoop, StopsAfterPatienceEpochsWithoutGain) {
  const auto d = small_data();
  auto tc = fast_tc(30);
  tc.patience = 2;
  tc.lr = 1e-12;  // parameters effectively frozen, so dev BLEU never improves
  const auto res = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);
  ASSERT_EQ(res.log.epochs.size(), 3u);
  EXPECT_EQ(res.best_epoch, 1);
}

TEST(TrainLoop, SameSeedSameRun) {
  const auto d = small_data();
  testing::TempDir a("run_a"), b("run_b");
  auto tc = fast_tc(3);
  tc.out_dir = a.path();
  const auto r1 = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);
  tc.out_dir = b.path();
  const auto r2 = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);
  EXPECT_EQ(r1.log.to_csv(false), r2.log.to_csv(false));
  for (const auto& [name, t] : r1.final_params) EXPECT_EQ(t.value, r2.final_params.at(name).value) << name;
  for (const char* f : {"last.ckpt", "best.ckpt", "last.state"}) {
    EXPECT_EQ(bytes_of(a / f), bytes_of(b / f)) << f;
  }
  EXPECT_EQ(TrainLog::read_csv(a / "train_log.csv").to_csv(false), r1.log.to_csv(false));

  auto other = fast_tc(3);
  other.seed = 5;
  const auto r3 = train_loop(d.examples, d.examples, d.vocab, small_model(), other);
  EXPECT_NE(r1.log.to_csv(false), r3.log.to_csv(false));
}

TEST(TrainLoop, ResumeMatchesUninterruptedRun) {
  const auto d = small_data();
  testing::TempDir full("full"), split("split");
  auto tc = fast_tc(6);
  tc.out_dir = full.path();
  const auto straight = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);

  auto first = fast_tc(6);
  first.max_epochs = 3;
  first.out_dir = split.path();
  train_loop(d.examples, d.examples, d.vocab, small_model(), first);
  auto second = fast_tc(6);
  second.out_dir = split.path();
  second.resume = true;
  const auto resumed = train_loop(d.examples, d.examples, d.vocab, small_model(), second);

  EXPECT_EQ(resumed.log.to_csv(false), straight.log.to_csv(false));
  EXPECT_EQ(bytes_of(full / "last.ckpt"), bytes_of(split / "last.ckpt"));
  EXPECT_EQ(bytes_of(full / "best.ckpt"), bytes_of(split / "best.ckpt"));
  EXPECT_EQ(resumed.best_epoch, straight.best_epoch);
}

TEST(TrainLoop, NonFiniteLossIsReported) {
  auto d = small_data();
  d.examples[0].feats.values[0] = std::nanf("");
  testing::TempDir dir("diverge");
  auto tc = fast_tc(3);
  tc.out_dir = dir.path();
  const auto res = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);
  EXPECT_TRUE(res.log.diverged);
  EXPECT_NE(res.log.diagnostic.find("epoch 1"), std::string::npos) << res.log.diagnostic;
  EXPECT_TRUE(std::filesystem::exists(dir / "diverged.txt"));
}

TEST(TrainLoop, EmptySetsAreErrors) {
  const auto d = small_data();
  EXPECT_THROW(train_loop({}, d.examples, d.vocab, small_model(), fast_tc(1)), InvalidArgument);
  EXPECT_THROW(train_loop(d.examples, {}, d.vocab, small_model(), fast_tc(1)), InvalidArgument);
}

TEST(EvaluateDev, Errors) {
  const auto d = small_data();
  auto cfg = small_model();
  cfg.vocab_size = d.vocab.size();
  const auto params = model::init_params<float>(cfg, 1);
  EXPECT_THROW(evaluate_dev({}, params, cfg, d.vocab, infer::Mode::greedy), InvalidArgument);
  auto dev = d.examples;
  dev[2].utt.translations.clear();
  EXPECT_THROW(evaluate_dev(dev, params, cfg, d.vocab, infer::Mode::greedy), InvalidArgument);
  infer::DecodeOptions opts;
  opts.max_len = 4;
  const auto r = evaluate_dev(d.examples, params, cfg, d.vocab, infer::Mode::beam, opts);
  EXPECT_GE(r.score, 0.0);
  EXPECT_LE(r.score, 100.0);
}

TEST(TrainLog, CsvRoundTrip) {
  TrainLog log;
  log.epochs.push_back({1, 2.5, 10.0, 0.25, 400.0, 0.5});
  log.epochs.push_back({2, 1.25, 12.5, 0.5, 380.0, 0.6});
  testing::TempDir dir("log");
  log.write_csv(dir / "log.csv");
  const auto text = bytes_of(dir / "log.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,loss,dev_bleu,seconds,tokens_per_sec");
  const auto back = TrainLog::read_csv(dir / "log.csv");
  ASSERT_EQ(back.epochs.size(), 2u);
  EXPECT_EQ(back.epochs[1].epoch, 2);
  EXPECT_EQ(back.epochs[1].loss, 1.25);
  EXPECT_EQ(back.epochs[1].dev_bleu, 12.5);
  EXPECT_EQ(back.to_csv(false), log.to_csv(false));
  std::ofstream(dir / "bad.csv") << "epoch,loss\n1,2\n";
  EXPECT_THROW(TrainLog::read_csv(dir / "bad.csv"), FormatError);
}

TEST(Ablation, FullFractionMatchesPlainRun) {
  const auto d = small_data();
  AblationInput in;
  in.train_utts = d.synth.utts;
  in.train_feats = d.synth.feats;
  in.dev_utts = d.synth.utts;
  in.dev_feats = d.synth.feats;
  const auto tc = fast_tc(3);
  const auto rows = ablate(in, {1.0}, small_model(), tc);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].error.empty()) << rows[0].error;
  ASSERT_TRUE(rows[0].result.has_value());
  EXPECT_EQ(rows[0].n_utts, d.synth.utts.size());
  EXPECT_NEAR(rows[0].hours, corpus::corpus_hours(d.synth.utts), 1e-12);
  EXPECT_EQ(rows[0].variant, "word-bi-greedy");

  const auto plain = train_loop(d.examples, d.examples, d.vocab, small_model(), tc);
  EXPECT_EQ(rows[0].result->log.to_csv(false), plain.log.to_csv(false));
  for (const auto& [name, t] : plain.final_params) {
    EXPECT_EQ(t.value, rows[0].result->final_params.at(name).value) << name;
  }
  ASSERT_TRUE(rows[0].report.has_value());
  EXPECT_TRUE(rows[0].report->has_train_counts);
}

TEST(Ablation, SubsetsShrinkAndErrorsArePerRow) {
  const auto d = small_data(corpus::Level::word, 16);
  AblationInput in;
  in.train_utts = d.synth.utts;
  in.train_feats = d.synth.feats;
  in.dev_utts = d.synth.utts;
  in.dev_feats = d.synth.feats;
  auto tc = fast_tc(1);
  const auto rows = ablate(in, {0.25, 1.0}, small_model(), tc);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[0].n_utts, rows[1].n_utts);
  EXPECT_LT(rows[0].hours, rows[1].hours);
  EXPECT_TRUE(rows[0].error.empty()) << rows[0].error;
  in.dev_feats.pop_back();
  EXPECT_THROW(ablate(in, {1.0}, small_model(), tc), InvalidArgument);
  EXPECT_THROW(ablate(in, {0.0}, small_model(), tc), InvalidArgument);
}

TEST(Ablation, DivergedRowRecordsError) {
  auto d = small_data();
  AblationInput in;
  in.train_utts = d.synth.utts;
  in.train_feats = d.synth.feats;
  in.train_feats[0].values[3] = std::nanf("");
  in.dev_utts = d.synth.utts;
  in.dev_feats = d.synth.feats;
  const auto rows = ablate(in, {1.0}, small_model(), fast_tc(2));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NE(rows[0].error.find("non-finite"), std::string::npos) << rows[0].error;
  EXPECT_FALSE(rows[0].report.has_value());
}

TEST(Variant, Names) {
  auto cfg = small_model();
  EXPECT_EQ(variant_name(cfg, infer::Mode::beam), "word-bi-beam");
  cfg.decoder_level = corpus::Level::character;
  cfg.enc_direction = model::Direction::uni;
  EXPECT_EQ(variant_name(cfg, infer::Mode::greedy), "char-uni-greedy");
}

}  // namespace
}  // namespace s2t::train
