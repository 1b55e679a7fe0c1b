#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "s2t/checkpoint.hpp"
#include "s2t/eval.hpp"
#include "s2t/infer.hpp"

namespace s2t::train {

struct TrainConfig {
  int max_epochs = 50;
  int patience = 5;  // epochs without a dev-BLEU gain before stopping
  uint64_t seed = 1;
  double lr = 1e-3;
  double clip_norm = 0.0;
  infer::Mode eval_mode = infer::Mode::beam;
  int eval_max_len = 0;  // 0: derived from the encoder length
  std::optional<corpus::SubsetSpec> subset;
  corpus::Level level = corpus::Level::word;
  bool per_step_dropout = false;
  // When set, every epoch refreshes last.ckpt/last.state/best.ckpt and
  // train_log.csv here; with `resume` an existing last.state is picked up.
  std::filesystem::path out_dir;
  bool resume = false;
  std::string vocab_path;  // recorded in checkpoints

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double dev_bleu = 0.0;
  double seconds = 0.0;  // training pass only
  double tokens_per_sec = 0.0;
  double token_accuracy = 0.0;  // argmax == gold over real target positions
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::string diagnostic;

  // "epoch,loss,dev_bleu,seconds,tokens_per_sec"; with_timing=false drops the
  // last two columns, leaving only the seed-determined values.
  std::string to_csv(bool with_timing = true) const;
  void write_csv(const std::filesystem::path& path) const;
  static TrainLog read_csv(const std::filesystem::path& path);
};

struct TrainResult {
  Checkpoint best;
  nn::ParameterSet<float> final_params;
  TrainLog log;
  int best_epoch = 0;
  double best_bleu = 0.0;
};

// Throws InvalidArgument on empty sets. A non-finite loss stops training and
// is reported through log.diverged / log.diagnostic.
TrainResult train_loop(const std::vector<corpus::Example>& train_set, const std::vector<corpus::Example>& dev_set,
                       const corpus::Vocabulary& vocab, model::ModelConfig cfg, const TrainConfig& tc);

// Corpus BLEU of decoded dev utterances against all of their references.
eval::BleuResult evaluate_dev(const std::vector<corpus::Example>& dev_set, const nn::ParameterSet<float>& params,
                              const model::ModelConfig& cfg, const corpus::Vocabulary& vocab, infer::Mode mode,
                              const infer::DecodeOptions& options = {});

// Hypotheses and references for a decoded set, ready for eval::evaluate.
struct DecodedSet {
  std::vector<eval::Tokens> hyps;
  eval::ReferenceSet refs;
  std::vector<infer::Translation> translations;
};

DecodedSet decode_set(const std::vector<corpus::Example>& set, const nn::ParameterSet<float>& params,
                      const model::ModelConfig& cfg, const corpus::Vocabulary& vocab, infer::Mode mode,
                      const infer::DecodeOptions& options = {});

struct AblationInput {
  std::vector<corpus::Utterance> train_utts;
  std::vector<features::FeatureMatrix> train_feats;
  std::vector<corpus::Utterance> dev_utts;
  std::vector<features::FeatureMatrix> dev_feats;
  int min_count = 1;
};

struct AblationRow {
  double fraction = 0.0;
  double hours = 0.0;  // duration of the sampled subset
  size_t n_utts = 0;
  std::string variant;
  std::optional<eval::EvalReport> report;
  std::optional<TrainResult> result;
  std::string error;  // non-empty when this fraction failed
};

std::string variant_name(const model::ModelConfig& cfg, infer::Mode mode);

// Nested subsets of the training utterances, one full training run per
// fraction, evaluated on the fixed dev set. The vocabulary is rebuilt from
// each subset. Failures are recorded per row.
std::vector<AblationRow> ablate(const AblationInput& input, const std::vector<double>& fractions,
                                const model::ModelConfig& cfg, const TrainConfig& tc,
                                const eval::MatchResources& resources = {}, const eval::EvalOptions& eval_options = {});

}  // namespace s2t::train
