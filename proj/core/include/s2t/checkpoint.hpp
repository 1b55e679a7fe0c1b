#pragma once

#include <filesystem>
#include <string>

#include "s2t/model.hpp"
#include "s2t/nn/optim.hpp"

namespace s2t {

constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig config;
  nn::ParameterSet<float> params;
  std::string vocab_path;
};

// "S2T1", u32 version, config text, vocabulary reference, u32 tensor count,
// then per tensor: name, u32 rank, u32 dims, float32 values (little-endian).
// Writes to a temporary sibling and renames, so readers never see a partial
// file.
void save_checkpoint(const std::filesystem::path& path, const nn::ParameterSet<float>& params,
                     const model::ModelConfig& cfg, const std::string& vocab_path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Everything needed to resume training exactly: Adam moments plus loop
// bookkeeping. Stored next to the checkpoint ("S2O1").
struct TrainerState {
  nn::OptimizerState<float> optimizer;
  int epochs_done = 0;
  double best_bleu = -1.0;
  int best_epoch = 0;
  int epochs_since_best = 0;
};

void save_trainer_state(const std::filesystem::path& path, const TrainerState& state);
TrainerState load_trainer_state(const std::filesystem::path& path);

}  // namespace s2t
