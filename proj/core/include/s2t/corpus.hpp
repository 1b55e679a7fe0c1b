#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "s2t/features.hpp"

namespace s2t::corpus {

enum class Level { word, character };

std::string_view to_string(Level level);
Level parse_level(std::string_view text);

struct Utterance {
  std::string id;
  std::string feature_path;
  int n_frames = 0;
  // 1..4 normalized references; the first one is the training target.
  std::vector<std::vector<std::string>> translations;
};

// Lower-cases, drops punctuation (keeping apostrophes between word
// characters) and splits on whitespace.
std::vector<std::string> normalize_and_tokenize(std::string_view raw);

// Splits a UTF-8 token into code points.
std::vector<std::string> utf8_chars(std::string_view token);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;
  // Inter-word symbol for character-level targets.
  static constexpr std::string_view kSpace = "<sp>";
  // Printable rendering of UNK in translation output.
  static constexpr std::string_view kUnkMarker = "<unk>";

  Vocabulary() = default;

  // Ids: specials, then tokens by descending count, ties lexicographic.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences, int min_count,
                          Level level);
  // Vocabulary file: one token per line, line index = id - 4.
  static Vocabulary load(const std::filesystem::path& path, Level level);
  void save(const std::filesystem::path& path) const;

  Level level() const { return level_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  int64_t count(std::string_view token) const;

  // Word level: one id per token; character level: one id per code point with
  // kSpace between words. Always terminated with EOS.
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Inverse of encode: stops at EOS, skips PAD/SOS, renders UNK as kUnkMarker.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  bool operator==(const Vocabulary& other) const {
    return level_ == other.level_ && tokens_ == other.tokens_;
  }

 private:
  Level level_ = Level::word;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int64_t> counts_;

  void add(std::string token, int64_t count);
};

std::vector<int> encode_target(const std::vector<std::string>& tokens, const Vocabulary& vocab);

constexpr int kBucketWidth = 25;
constexpr int kNumBuckets = 80;
constexpr int kWordFrameCap = 2000;  // 20 s at a 10 ms hop
constexpr int kCharFrameCap = 1500;  // 15 s

struct BucketAssignment {
  int bucket_id = 0;
  int frames = 0;  // after truncation
  bool operator==(const BucketAssignment&) const = default;
};

BucketAssignment assign_bucket(int n_frames, Level level = Level::word);

// An utterance with its features loaded and its target encoded.
struct Example {
  Utterance utt;
  features::FeatureMatrix feats;
  std::vector<int> target;
};

struct Batch {
  int batch_size = 0;
  int max_frames = 0;
  int n_mels = 0;
  int max_target = 0;
  int bucket_id = 0;
  std::vector<float> features;  // batch x max_frames x n_mels, zero padded
  std::vector<int> feature_lengths;
  std::vector<int> targets;  // batch x max_target, PAD padded
  std::vector<int> target_lengths;
  std::vector<size_t> source_index;  // position of each row in the input set
  std::vector<std::string> ids;

  float feature(int b, int t, int m) const {
    return features[(static_cast<size_t>(b) * max_frames + t) * n_mels + m];
  }
  int target(int b, int l) const { return targets[static_cast<size_t>(b) * max_target + l]; }
};

// Pads a fixed list of examples into one batch (features truncated to the
// level's frame cap).
Batch make_batch(const std::vector<Example>& examples, const std::vector<size_t>& rows,
                 Level level, int bucket_id = 0);

std::vector<Batch> make_batches(const std::vector<Example>& examples, int max_batch, uint64_t seed,
                                Level level = Level::word);

struct SubsetSpec {
  double target_hours = 0.0;
  uint64_t seed = 0;
  bool nested = true;
};

double utterance_hours(const Utterance& utt, double hop_ms = 10.0);
double corpus_hours(const std::vector<Utterance>& utts, double hop_ms = 10.0);

// Indices into `utts`, in draw order.
std::vector<size_t> sample_subset(const std::vector<Utterance>& utts, const SubsetSpec& spec,
                                  double hop_ms = 10.0);

// JSON-lines manifest: {"id", "features", "n_frames", "translations": [...]}.
std::vector<Utterance> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<Utterance>& utts);

// Reads every utterance's features (relative paths resolve against the
// manifest's directory) and encodes its first translation.
std::vector<Example> load_examples(const std::filesystem::path& manifest, const Vocabulary& vocab);
std::vector<Example> make_examples(const std::vector<Utterance>& utts,
                                   const std::vector<features::FeatureMatrix>& feats,
                                   const Vocabulary& vocab);

// Training-target token counts, used by the frequency-bucket analysis.
std::map<std::string, int64_t> token_counts(const std::vector<Utterance>& utts);

struct SynthConfig {
  int n_utts = 50;
  int vocab_size = 30;
  int min_words = 2;
  int max_words = 6;
  int n_mels = 80;
  int min_signature_frames = 8;
  int max_signature_frames = 12;
  double noise = 0.05;
  uint64_t seed = 7;
};

struct SynthCorpus {
  std::vector<std::string> words;
  std::vector<features::FeatureMatrix> signatures;  // one per word
  std::vector<Utterance> utts;
  std::vector<features::FeatureMatrix> feats;  // aligned with utts
};

// Each word owns a fixed multi-frame feature signature; an utterance is the
// concatenation of its words' signatures plus seeded uniform noise.
SynthCorpus synth_corpus(const SynthConfig& cfg);

}  // namespace s2t::corpus
