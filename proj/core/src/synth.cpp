#include <random>
#include <set>

#include "s2t/corpus.hpp"

namespace s2t::corpus {

namespace {

std::string make_word(std::mt19937_64& rng) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
  static constexpr std::string_view kVowels = "aeiou";
  int len = 4 + static_cast<int>(uniform01(rng) * 4.0);  // 4..7 letters
  std::string w;
  bool vowel = uniform01(rng) < 0.3;
  for (int i = 0; i < len; ++i) {
    auto pool = vowel ? kVowels : kConsonants;
    w += pool[static_cast<size_t>(uniform01(rng) * static_cast<double>(pool.size()))];
    vowel = !vowel;
  }
  return w;
}

int draw_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& cfg) {
  if (cfg.vocab_size < 2) throw InvalidArgument("synthetic vocabulary needs >= 2 words");
  if (cfg.n_utts < 1) throw InvalidArgument("synthetic corpus needs >= 1 utterance");
  if (cfg.min_words < 1 || cfg.max_words < cfg.min_words) throw InvalidArgument("bad word-count range");
  if (cfg.min_signature_frames < 1 || cfg.max_signature_frames < cfg.min_signature_frames) {
    throw InvalidArgument("bad signature length range");
  }

  SynthCorpus out;
  std::mt19937_64 word_rng(sub_seed(cfg.seed, "synth.words"));
  std::set<std::string> seen;
  while (static_cast<int>(out.words.size()) < cfg.vocab_size) {
    auto w = make_word(word_rng);
    if (seen.insert(w).second) out.words.push_back(w);
  }

  std::mt19937_64 sig_rng(sub_seed(cfg.seed, "synth.signatures"));
  for (int w = 0; w < cfg.vocab_size; ++w) {
    int frames = draw_int(sig_rng, cfg.min_signature_frames, cfg.max_signature_frames);
    features::FeatureMatrix sig(frames, cfg.n_mels);
    for (auto& v : sig.values) v = static_cast<float>(2.0 * uniform01(sig_rng) - 1.0);
    out.signatures.push_back(std::move(sig));
  }

  std::mt19937_64 utt_rng(sub_seed(cfg.seed, "synth.utterances"));
  for (int u = 0; u < cfg.n_utts; ++u) {
    int n_words = draw_int(utt_rng, cfg.min_words, cfg.max_words);
    std::vector<int> words(static_cast<size_t>(n_words));
    int frames = 0;
    for (auto& w : words) {
      w = draw_int(utt_rng, 0, cfg.vocab_size - 1);
      frames += out.signatures[static_cast<size_t>(w)].n_frames;
    }
    features::FeatureMatrix feats(frames, cfg.n_mels);
    int t0 = 0;
    std::vector<std::string> tokens;
    for (int w : words) {
      const auto& sig = out.signatures[static_cast<size_t>(w)];
      std::copy(sig.values.begin(), sig.values.end(),
                feats.values.begin() + static_cast<ptrdiff_t>(t0) * cfg.n_mels);
      t0 += sig.n_frames;
      tokens.push_back(out.words[static_cast<size_t>(w)]);
    }
    for (auto& v : feats.values) {
      v = static_cast<float>(v + cfg.noise * (2.0 * uniform01(utt_rng) - 1.0));
    }
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05d", u);
    out.utts.push_back({id, "", frames, {tokens}});
    out.feats.push_back(std::move(feats));
  }
  return out;
}

}  // namespace s2t::corpus
