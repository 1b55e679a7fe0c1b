#include "s2t/infer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace s2t::infer {

using corpus::Vocabulary;
using nn::Matrix;

std::vector<int> Hypothesis::output_tokens() const {
  std::vector<int> out = tokens;
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

Mode parse_mode(std::string_view text) {
  if (text == "greedy") return Mode::greedy;
  if (text == "beam") return Mode::beam;
  throw InvalidArgument("unknown decode mode '" + std::string(text) + "' (greedy|beam)");
}

std::string_view to_string(Mode mode) { return mode == Mode::greedy ? "greedy" : "beam"; }

int auto_max_len(const model::ModelConfig& cfg, int encoder_steps) {
  const int per_step = cfg.decoder_level == corpus::Level::word ? 2 : 8;
  return 10 + per_step * encoder_steps;
}

template <typename T>
DecoderSession<T>::DecoderSession(const nn::ParameterSet<T>& params, const model::ModelConfig& cfg,
                                  const features::FeatureMatrix& feats)
    : tape_(false),
      // A non-recording tape never writes gradients into the tensors.
      params_(const_cast<nn::ParameterSet<T>*>(&params)),
      cfg_(cfg),
      enc_(model::encode_features(tape_, *params_, cfg_, feats)) {}

template <typename T>
model::DecoderState DecoderSession<T>::initial_state() {
  return model::initial_decoder_state(tape_, cfg_, 1);
}

template <typename T>
typename DecoderSession<T>::Step DecoderSession<T>::step(int prev_token, const model::DecoderState& state) {
  const int prev[] = {prev_token};
  auto out = model::decode_step<T>(tape_, *params_, cfg_, prev, state, enc_);
  return {nn::log_softmax_rows(tape_.value(out.logits)), out.state};
}

template <typename T>
Hypothesis greedy_decode(DecoderSession<T>& session, int max_len) {
  if (max_len < 1) throw InvalidArgument("greedy_decode: max_len must be >= 1");
  Hypothesis hyp;
  hyp.state = session.initial_state();
  int prev = Vocabulary::kSos;
  for (int t = 0; t < max_len; ++t) {
    auto step = session.step(prev, hyp.state);
    Eigen::Index best = 0;
    for (Eigen::Index v = 1; v < step.log_probs.cols(); ++v) {
      if (step.log_probs(0, v) > step.log_probs(0, best)) best = v;
    }
    hyp.log_prob += static_cast<double>(step.log_probs(0, best));
    hyp.tokens.push_back(static_cast<int>(best));
    hyp.state = step.state;
    prev = static_cast<int>(best);
    if (prev == Vocabulary::kEos) break;
  }
  hyp.finished = true;
  return hyp;
}

namespace {

double ranking_score(const Hypothesis& h, double length_penalty) {
  if (length_penalty == 0.0) return h.log_prob;
  return h.log_prob / std::pow(static_cast<double>(std::max<size_t>(h.tokens.size(), 1)), length_penalty);
}

bool better(const Hypothesis& a, const Hypothesis& b, double length_penalty) {
  const double sa = ranking_score(a, length_penalty), sb = ranking_score(b, length_penalty);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

struct Candidate {
  double score;
  size_t parent;
  int token;
};

}  // namespace

template <typename T>
std::vector<Hypothesis> beam_decode(DecoderSession<T>& session, int beam, int max_len, double length_penalty) {
  if (beam < 1) throw InvalidArgument("beam_decode: beam must be >= 1");
  if (max_len < 1) throw InvalidArgument("beam_decode: max_len must be >= 1");
  std::vector<Hypothesis> live(1);
  live[0].state = session.initial_state();
  std::vector<Hypothesis> completed;

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Candidate> cands;
    std::vector<model::DecoderState> next_states;
    for (size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].tokens.empty() ? Vocabulary::kSos : live[i].tokens.back();
      auto step = session.step(prev, live[i].state);
      next_states.push_back(step.state);
      for (Eigen::Index v = 0; v < step.log_probs.cols(); ++v) {
        cands.push_back({live[i].log_prob + static_cast<double>(step.log_probs(0, v)), i, static_cast<int>(v)});
      }
    }
    // Score descending; ties resolved by the lexicographically smaller
    // extended token sequence.
    auto order = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& ta = live[a.parent].tokens;
      const auto& tb = live[b.parent].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    };
    // At most one EOS per live hypothesis can precede the beam-th survivor.
    const size_t needed = std::min(cands.size(), static_cast<size_t>(beam) + live.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<ptrdiff_t>(needed), cands.end(), order);

    std::vector<Hypothesis> next;
    for (size_t k = 0; k < needed && static_cast<int>(next.size()) < beam; ++k) {
      const auto& c = cands[k];
      Hypothesis h;
      h.tokens = live[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.score;
      h.state = next_states[c.parent];
      if (c.token == Vocabulary::kEos) {
        h.finished = true;
        completed.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    if (t == max_len - 1) {
      for (auto& h : next) {
        h.finished = true;
        completed.push_back(std::move(h));
      }
      next.clear();
    }
    live = std::move(next);
    // Log-probabilities only decrease, so no live hypothesis can overtake a
    // completed one that already scores at least as high.
    if (length_penalty == 0.0 && !completed.empty() && !live.empty()) {
      double best_done = completed[0].log_prob;
      for (const auto& h : completed) best_done = std::max(best_done, h.log_prob);
      double best_live = live[0].log_prob;
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_done >= best_live) break;
    }
  }
  std::sort(completed.begin(), completed.end(),
            [&](const Hypothesis& a, const Hypothesis& b) { return better(a, b, length_penalty); });
  if (static_cast<int>(completed.size()) > beam) completed.resize(static_cast<size_t>(beam));
  return completed;
}

template <typename T>
double score_sequence(DecoderSession<T>& session, const std::vector<int>& tokens) {
  auto state = session.initial_state();
  int prev = Vocabulary::kSos;
  double total = 0.0;
  for (int tok : tokens) {
    auto step = session.step(prev, state);
    total += static_cast<double>(step.log_probs(0, tok));
    state = step.state;
    prev = tok;
  }
  return total;
}

std::vector<std::string> detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  return vocab.decode(ids);
}

Translation translate_one(const nn::ParameterSet<float>& params, const model::ModelConfig& cfg,
                          const Vocabulary& vocab, const std::string& id, const features::FeatureMatrix& feats,
                          Mode mode, const DecodeOptions& options) {
  DecoderSession<float> session(params, cfg, feats);
  const int max_len = options.max_len > 0 ? options.max_len : auto_max_len(cfg, session.encoder().steps);
  Hypothesis best;
  if (mode == Mode::greedy) {
    best = greedy_decode(session, max_len);
  } else {
    auto nbest = beam_decode(session, options.beam, max_len, options.length_penalty);
    best = nbest.front();
  }
  return {id, detokenize(best.tokens, vocab), best.log_prob, {}};
}

std::vector<Translation> batch_translate(const std::vector<corpus::Utterance>& utts,
                                         const std::filesystem::path& feature_root,
                                         const nn::ParameterSet<float>& params, const model::ModelConfig& cfg,
                                         const Vocabulary& vocab, Mode mode, const DecodeOptions& options) {
  std::vector<Translation> out;
  out.reserve(utts.size());
  for (const auto& u : utts) {
    try {
      std::filesystem::path p = u.feature_path;
      if (p.is_relative()) p = feature_root / p;
      auto feats = features::read_features(p);
      out.push_back(translate_one(params, cfg, vocab, u.id, feats, mode, options));
    } catch (const std::exception& e) {
      out.push_back({u.id, {}, 0.0, e.what()});
    }
  }
  return out;
}

std::vector<Translation> batch_translate(const std::vector<corpus::Example>& examples,
                                         const nn::ParameterSet<float>& params, const model::ModelConfig& cfg,
                                         const Vocabulary& vocab, Mode mode, const DecodeOptions& options) {
  std::vector<Translation> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    try {
      out.push_back(translate_one(params, cfg, vocab, ex.utt.id, ex.feats, mode, options));
    } catch (const std::exception& e) {
      out.push_back({ex.utt.id, {}, 0.0, e.what()});
    }
  }
  return out;
}

void write_translations(const std::filesystem::path& path, const std::vector<Translation>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write translations: " + path.string());
  for (const auto& r : rows) {
    nlohmann::json j = {{"id", r.id}, {"tokens", r.tokens}, {"logprob", r.log_prob}};
    if (!r.error.empty()) j["error"] = r.error;
    out << j.dump() << '\n';
  }
}

std::vector<Translation> read_translations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hypothesis file: " + path.string());
  std::vector<Translation> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Translation t;
      t.id = j.at("id").get<std::string>();
      t.tokens = j.at("tokens").get<std::vector<std::string>>();
      t.log_prob = j.value("logprob", 0.0);
      t.error = j.value("error", std::string{});
      rows.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

template class DecoderSession<float>;
template class DecoderSession<double>;
template Hypothesis greedy_decode<float>(DecoderSession<float>&, int);
template Hypothesis greedy_decode<double>(DecoderSession<double>&, int);
template std::vector<Hypothesis> beam_decode<float>(DecoderSession<float>&, int, int, double);
template std::vector<Hypothesis> beam_decode<double>(DecoderSession<double>&, int, int, double);
template double score_sequence<float>(DecoderSession<float>&, const std::vector<int>&);
template double score_sequence<double>(DecoderSession<double>&, const std::vector<int>&);

}  // namespace s2t::infer
