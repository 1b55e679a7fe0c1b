#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "s2t/config.hpp"
#include "s2t/train.hpp"

namespace s2t::experiment {

// Concrete file locations for a run directory, after applying defaults.
struct RunPaths {
  std::filesystem::path run_dir;
  std::filesystem::path train_manifest;
  std::filesystem::path dev_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path vocab;
  std::filesystem::path checkpoint;
  std::filesystem::path hyps;
  bool hyps_explicit = false;
};

RunPaths resolve_paths(const RunConfig& cfg, const std::filesystem::path& run_dir);

struct LoadedCorpus {
  std::vector<corpus::Utterance> utts;
  std::vector<features::FeatureMatrix> feats;
};

LoadedCorpus load_corpus(const std::filesystem::path& manifest);

// Audio manifest rows {"id", "audio", "translations"|"translation"} become
// FBK1 files under <run>/features plus <run>/train.jsonl (or the configured
// train manifest path). Returns the manifest written.
std::filesystem::path prepare_features(const RunConfig& cfg, const std::filesystem::path& run_dir);
corpus::Vocabulary build_vocab(const RunConfig& cfg, const std::filesystem::path& run_dir);
// Writes train.jsonl, dev.jsonl and features/ for a synthetic corpus.
corpus::SynthCorpus synth_corpus(const RunConfig& cfg, const std::filesystem::path& run_dir);
train::TrainResult run_train(const RunConfig& cfg, const std::filesystem::path& run_dir);
std::vector<infer::Translation> run_translate(const RunConfig& cfg, const std::filesystem::path& run_dir);
eval::EvalReport run_evaluate(const RunConfig& cfg, const std::filesystem::path& run_dir);
std::vector<train::AblationRow> run_ablate(const RunConfig& cfg, const std::filesystem::path& run_dir);

struct MetricsRow {
  double hours = 0.0;
  double bleu = 0.0;
  double meteor = 0.0;
  double precision = 0.0;
  double recall_staged = 0.0;
  double recall_exact = 0.0;
  std::string variant;
};

MetricsRow metrics_row(double hours, const eval::EvalReport& report, const std::string& variant);

// CSV "hours,bleu,meteor,precision,recall_staged,recall_exact,variant",
// ascending by hours (then variant). Rates are fractions; BLEU is x100.
std::string emit_metrics_table(std::vector<MetricsRow> rows);

}  // namespace s2t::experiment
