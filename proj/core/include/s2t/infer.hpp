#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "s2t/model.hpp"

namespace s2t::infer {

struct Hypothesis {
  std::vector<int> tokens;  // no SOS; ends with EOS when finished by EOS
  double log_prob = 0.0;
  bool finished = false;
  model::DecoderState state;

  // Tokens with the terminal EOS removed.
  std::vector<int> output_tokens() const;
};

enum class Mode { greedy, beam };
Mode parse_mode(std::string_view text);
std::string_view to_string(Mode mode);

struct DecodeOptions {
  int beam = 8;
  int max_len = 0;  // <= 0 picks a limit from the encoder length
  // Rank completed hypotheses by log_prob / len^length_penalty; 0 disables.
  double length_penalty = 0.0;
};

int auto_max_len(const model::ModelConfig& cfg, int encoder_steps);

// Holds a non-recording tape with one utterance's encoder states; each step
// appends to it. Parameters are only read.
template <typename T>
class DecoderSession {
 public:
  DecoderSession(const nn::ParameterSet<T>& params, const model::ModelConfig& cfg,
                 const features::FeatureMatrix& feats);

  const model::EncoderStates& encoder() const { return enc_; }
  model::DecoderState initial_state();

  struct Step {
    nn::Matrix<T> log_probs;  // 1 x vocab
    model::DecoderState state;
  };
  Step step(int prev_token, const model::DecoderState& state);

 private:
  nn::Tape<T> tape_;
  nn::ParameterSet<T>* params_;
  model::ModelConfig cfg_;
  model::EncoderStates enc_;
};

// Argmax each step (ties -> lowest id) until EOS or max_len tokens.
template <typename T>
Hypothesis greedy_decode(DecoderSession<T>& session, int max_len);

// Beam search without length normalization by default. EOS-terminated
// hypotheses move to a completed pool and free their slot. Returns the
// completed pool sorted best-first (log-prob desc, then token sequence asc),
// truncated to `beam` entries.
template <typename T>
std::vector<Hypothesis> beam_decode(DecoderSession<T>& session, int beam, int max_len,
                                    double length_penalty = 0.0);

// Sum of per-step log-softmax values along `tokens`, recomputed from scratch.
template <typename T>
double score_sequence(DecoderSession<T>& session, const std::vector<int>& tokens);

struct Translation {
  std::string id;
  std::vector<std::string> tokens;
  double log_prob = 0.0;
  std::string error;  // non-empty when this utterance failed
};

// Renders ids as output tokens: word level keeps one token per id, character
// level joins characters and splits on the space symbol; UNK -> "<unk>".
std::vector<std::string> detokenize(const std::vector<int>& ids, const corpus::Vocabulary& vocab);

Translation translate_one(const nn::ParameterSet<float>& params, const model::ModelConfig& cfg,
                          const corpus::Vocabulary& vocab, const std::string& id,
                          const features::FeatureMatrix& feats, Mode mode,
                          const DecodeOptions& options = {});

// Per-utterance failures (e.g. unreadable feature files) become error entries;
// output order follows input order.
std::vector<Translation> batch_translate(const std::vector<corpus::Utterance>& utts,
                                         const std::filesystem::path& feature_root,
                                         const nn::ParameterSet<float>& params,
                                         const model::ModelConfig& cfg,
                                         const corpus::Vocabulary& vocab, Mode mode,
                                         const DecodeOptions& options = {});

std::vector<Translation> batch_translate(const std::vector<corpus::Example>& examples,
                                         const nn::ParameterSet<float>& params,
                                         const model::ModelConfig& cfg,
                                         const corpus::Vocabulary& vocab, Mode mode,
                                         const DecodeOptions& options = {});

// JSON-lines {"id", "tokens", "logprob"} (+ "error" on failed rows).
void write_translations(const std::filesystem::path& path, const std::vector<Translation>& out);
std::vector<Translation> read_translations(const std::filesystem::path& path);

}  // namespace s2t::infer
