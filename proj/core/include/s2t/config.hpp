#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s2t/corpus.hpp"
#include "s2t/eval.hpp"
#include "s2t/features.hpp"
#include "s2t/model.hpp"
#include "s2t/train.hpp"

namespace s2t {

// Empty paths fall back to conventional names inside the run directory.
struct PathsConfig {
  std::string audio_manifest;  // prepare-features input
  std::string train_manifest;  // <run>/train.jsonl
  std::string dev_manifest;    // <run>/dev.jsonl
  std::string test_manifest;   // translate input; defaults to the dev manifest
  std::string vocab;           // <run>/vocab.txt
  std::string checkpoint;      // <run>/best.ckpt
  std::string hyps;            // <run>/hyps.jsonl
  std::string synonyms;
  std::string paraphrases;
};

struct EvalSettings {
  eval::MeteorParams meteor;
  int bleu_max_n = 4;
  infer::Mode mode = infer::Mode::beam;
  double length_penalty = 0.0;
  int max_len = 0;
};

struct SynthSettings {
  int n_train = 50;
  int n_dev = 0;  // 0: dev is the training set
  int vocab_size = 30;
  int min_words = 2;
  int max_words = 6;
  int min_signature_frames = 8;
  int max_signature_frames = 12;
  double noise = 0.05;
};

// Every knob of a run. Keys are flat and dotted: "frontend.n_mels",
// "model.dropout", "train.patience", "paths.vocab", "eval.alpha", ...
// model.n_mels follows frontend.n_mels and model.vocab_size comes from the
// vocabulary, so neither is settable.
struct RunConfig {
  uint64_t seed = 1;
  features::FrontendConfig frontend;
  model::ModelConfig model;
  train::TrainConfig train;
  int vocab_min_count = 1;
  std::vector<double> ablate_fractions = {0.125, 0.25, 0.5, 1.0};
  PathsConfig paths;
  EvalSettings eval;
  SynthSettings synth;

  void validate() const;
  // Copies the derived fields (model.n_mels, train.seed, train.level).
  void resolve();
};

// Throws InvalidArgument naming the key on unknown keys or malformed values.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg);
std::vector<std::string> config_keys();

// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text, const std::string& origin);

// defaults <- file <- overrides, then resolve() and validate().
RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

std::string serialize(const RunConfig& cfg);
void write_resolved_config(const std::filesystem::path& run_dir, const RunConfig& cfg);

}  // namespace s2t
