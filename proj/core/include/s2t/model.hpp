#pragma once

#include <string>
#include <utility>
#include <vector>

#include "s2t/corpus.hpp"
#include "s2t/nn/ops.hpp"

namespace s2t::model {

enum class Direction { uni, bi };

struct ModelConfig {
  int n_mels = 80;
  int cnn_layers = 2;
  int cnn_filters = 64;
  int cnn_kernel = 3;
  int cnn_stride = 2;
  int enc_layers = 3;
  int enc_hidden = 256;  // per direction when bidirectional
  Direction enc_direction = Direction::bi;
  int enc_hidden_uni = 300;
  int dec_layers = 3;
  int dec_hidden = 256;
  int emb_dim = 128;
  std::string attention = "global-general";
  bool input_feeding = true;
  corpus::Level decoder_level = corpus::Level::word;
  double dropout = 0.5;
  double l2 = 1e-4;
  double tf_ratio = 0.8;
  int beam = 8;
  int max_batch = 64;
  int vocab_size = 0;  // taken from the vocabulary

  void validate() const;
  int encoder_state_dim() const;  // 2 * enc_hidden (bi) or enc_hidden_uni
  int encoder_steps(int frames) const;
  int cnn_freq_out() const;
  int encoder_input_dim() const;
  int decoder_input_dim() const;

  bool operator==(const ModelConfig&) const = default;
};

// Flat key/value view used by the config file and the checkpoint header.
std::vector<std::pair<std::string, std::string>> to_key_values(const ModelConfig& cfg);
// Throws InvalidArgument naming the key on unknown keys or bad values.
void set_key(ModelConfig& cfg, const std::string& key, const std::string& value);
std::string serialize(const ModelConfig& cfg);
ModelConfig deserialize(const std::string& text);

// Uniform [-0.1, 0.1] weights, zero biases, forget-gate biases 1.0. Each
// tensor draws from its own generator seeded by (seed, name).
template <typename T>
nn::ParameterSet<T> init_params(const ModelConfig& cfg, uint64_t seed);

// Closed-form parameter count.
int64_t parameter_count(const ModelConfig& cfg);

struct RunOptions {
  bool training = false;
  uint64_t seed = 0;
  bool per_step_dropout = false;  // fresh recurrent dropout mask per step
  double tf_ratio = 1.0;          // used by forward_loss only
};

// Top-layer encoder outputs in time-major rows (s * batch + b), plus the
// attention keys states * W_a computed once per utterance batch.
struct EncoderStates {
  nn::Var states;
  nn::Var keys;
  int steps = 0;
  int batch = 0;
  std::vector<int> valid_lengths;
};

// Stacked LSTM over time-major input (steps * batch rows). Steps at or past a
// sequence's length leave its state unchanged.
template <typename T>
nn::Var lstm_sequence(nn::Tape<T>& tape, nn::ParameterSet<T>& params, const std::string& prefix,
                      nn::Var inputs, int steps, int batch, std::span<const int> lengths,
                      Direction direction, int layers, int hidden, double dropout = 0.0,
                      const RunOptions& run = {});

template <typename T>
EncoderStates encode(nn::Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                     const corpus::Batch& batch, const RunOptions& run = {});

template <typename T>
EncoderStates encode_features(nn::Tape<T>& tape, nn::ParameterSet<T>& params,
                              const ModelConfig& cfg, const features::FeatureMatrix& feats);

// Per-layer hidden/cell and the fed-back attentional vector.
struct DecoderState {
  std::vector<nn::Var> hidden;
  std::vector<nn::Var> cell;
  nn::Var feed;
};

template <typename T>
DecoderState initial_decoder_state(nn::Tape<T>& tape, const ModelConfig& cfg, int batch);

// Variational dropout masks, fixed for a whole sequence batch.
template <typename T>
struct DecoderDropout {
  nn::Matrix<T> embedding;
  std::vector<nn::Matrix<T>> layers;
};

template <typename T>
DecoderDropout<T> make_decoder_dropout(const ModelConfig& cfg, int batch, uint64_t seed);

struct AttentionOutput {
  nn::Var context;
  nn::Var weights;
  nn::Var attentional;  // tanh(W_c [context; query])
};

template <typename T>
AttentionOutput attend(nn::Tape<T>& tape, nn::ParameterSet<T>& params, nn::Var query,
                       const EncoderStates& enc);

struct StepOutput {
  nn::Var logits;
  nn::Var attention;
  DecoderState state;
};

template <typename T>
StepOutput decode_step(nn::Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                       std::span<const int> prev_tokens, const DecoderState& state,
                       const EncoderStates& enc, const DecoderDropout<T>* dropout = nullptr);

struct LossResult {
  nn::Var loss;
  int64_t correct = 0;  // argmax == gold over real target positions
  int64_t tokens = 0;
};

// Step t's input is the gold token t-1 with probability tf_ratio (a seeded
// coin per row and step), otherwise the model's own argmax at t-1.
template <typename T>
LossResult forward_loss(nn::Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                        const corpus::Batch& batch, const RunOptions& run);

}  // namespace s2t::model
