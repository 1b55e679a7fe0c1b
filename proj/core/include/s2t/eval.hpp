#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace s2t::eval {

using Tokens = std::vector<std::string>;
// Per utterance: one or more normalized reference token sequences.
using ReferenceSet = std::vector<std::vector<Tokens>>;

// Throws unless hyps and refs are aligned and every utterance has a reference.
void check_inputs(const std::vector<Tokens>& hyps, const ReferenceSet& refs, std::string_view what);

// ---- BLEU ----------------------------------------------------------------

struct BleuOptions {
  int max_n = 4;
  bool force_bp_one = false;
};

struct BleuResult {
  double score = 0.0;              // x100
  std::vector<double> precisions;  // p_1..p_max_n as fractions
  double bp = 1.0;
  int64_t hyp_length = 0;
  int64_t ref_length = 0;
  std::vector<int64_t> matches;
  std::vector<int64_t> totals;
};

BleuResult bleu_corpus(const std::vector<Tokens>& hyps, const ReferenceSet& refs,
                       const BleuOptions& options = {});

// Clipped true positives over hypothesis tokens, as a fraction.
double unigram_precision(const std::vector<Tokens>& hyps, const ReferenceSet& refs);

// ---- matching --------------------------------------------------------------

std::string porter_stem(std::string_view word);

// Groups of interchangeable tokens. File format: one group per line, members
// separated by tabs; blank lines and lines starting with '#' are ignored.
class EquivalenceTable {
 public:
  static EquivalenceTable load(const std::filesystem::path& path);
  void add_group(const std::vector<std::string>& members);
  bool equivalent(std::string_view a, std::string_view b) const;
  bool empty() const { return groups_.empty(); }

 private:
  std::unordered_map<std::string, std::vector<int>> groups_;  // token -> sorted group ids
  int next_group_ = 0;
};

enum class Stage { exact = 0, stem = 1, synonym = 2, paraphrase = 3 };
std::string_view to_string(Stage stage);

struct MatchResources {
  // Absent tables simply disable their stage.
  EquivalenceTable synonyms;
  EquivalenceTable paraphrases;
};

struct StageWeights {
  double exact = 1.0;
  double stem = 0.6;
  double synonym = 0.8;
  double paraphrase = 0.6;

  static StageWeights exact_only() { return {1.0, 0.0, 0.0, 0.0}; }
  double of(Stage stage) const;
  void validate() const;
};

struct AlignedPair {
  int hyp = 0;
  int ref = 0;
  Stage stage = Stage::exact;
  bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
  std::vector<AlignedPair> pairs;  // sorted by hyp index
  int chunks = 0;
  int crossings = 0;
  bool exhaustive = true;  // false when the search budget ran out
};

struct AlignOptions {
  bool use_stem = true;
  bool use_synonym = true;
  bool use_paraphrase = true;
  int64_t node_budget = 2'000'000;
};

// Earliest stage under which hyp and ref tokens match, if any.
bool match_stage(std::string_view hyp, std::string_view ref, const MatchResources& resources,
                 const AlignOptions& options, Stage& stage);

// One-to-one alignment of maximum cardinality; then fewest chunks, fewest
// crossings, lowest total stage index, lexicographically smallest.
Alignment align_matches(const Tokens& hyp, const Tokens& ref, const MatchResources& resources = {},
                        const AlignOptions& options = {});

int count_chunks(const std::vector<AlignedPair>& pairs);

struct MeteorParams {
  double alpha = 0.85;
  double beta = 0.2;
  double gamma = 0.6;
  StageWeights weights;
  void validate() const;
};

struct MeteorResult {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double fragmentation = 0.0;
  double penalty = 0.0;
  double weighted_matches = 0.0;
  int64_t matches = 0;
  int64_t chunks = 0;
  int64_t hyp_length = 0;
  int64_t ref_length = 0;
};

// Applies the scoring formulas to accumulated totals.
MeteorResult meteor_from_totals(double weighted_matches, int64_t matches, int64_t chunks, int64_t hyp_length,
                                int64_t ref_length, const MeteorParams& params);

// Stages whose weight is zero are not used for alignment.
MeteorResult meteor_score(const std::vector<Tokens>& hyps, const ReferenceSet& refs,
                          const MatchResources& resources = {}, const MeteorParams& params = {});

double unigram_recall(const std::vector<Tokens>& hyps, const ReferenceSet& refs,
                      const MatchResources& resources = {}, const StageWeights& weights = {});

// ---- content-word analysis -----------------------------------------------

using TokenCounts = std::map<std::string, int64_t>;

const std::set<std::string>& stopwords();
// Longer than five characters and not a stopword.
bool is_content_word(std::string_view token);

enum class FreqBucket { rare, medium, frequent, none };
// rare <= 10, medium 25..100, frequent >= 150; the gaps map to none.
FreqBucket frequency_bucket(int64_t train_count);
std::string_view to_string(FreqBucket bucket);

struct BucketStats {
  int64_t hyp_tokens = 0;
  int64_t true_positives = 0;
  int64_t ref_tokens = 0;
  int64_t recalled = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct BucketReport {
  BucketStats rare, medium, frequent;
  // Content tokens whose training count fell in a gap between buckets.
  int64_t gap_hyp_tokens = 0;
  int64_t gap_ref_tokens = 0;
  int64_t content_hyp_tokens = 0;
  int64_t content_ref_tokens = 0;
};

// Precision clips by the max count over an utterance's references; recall is
// exact-match and micro-averaged over every reference.
BucketReport freq_bucket_report(const std::vector<Tokens>& hyps, const ReferenceSet& refs,
                                const TokenCounts& train_counts);

struct OovReport {
  int64_t hyp_types = 0;
  int64_t hyp_tokens = 0;
  int64_t ref_types = 0;
  int64_t ref_tokens = 0;
  int64_t ref_recovered = 0;  // reference OOV tokens also produced by the hypothesis
};

OovReport oov_report(const std::vector<Tokens>& hyps, const TokenCounts& train_counts, const ReferenceSet& refs);

// ---- full report -----------------------------------------------------------

struct EvalOptions {
  MeteorParams meteor;
  int bleu_max_n = 4;
};

struct EvalReport {
  BleuResult bleu;
  MeteorResult meteor;
  double precision_unigram = 0.0;
  double recall_staged = 0.0;
  double recall_exact = 0.0;
  BucketReport buckets;
  OovReport oov;
  bool has_train_counts = false;
};

EvalReport evaluate(const std::vector<Tokens>& hyps, const ReferenceSet& refs, const MatchResources& resources,
                    const TokenCounts* train_counts, const EvalOptions& options = {});

nlohmann::json to_json(const EvalReport& report);

}  // namespace s2t::eval
