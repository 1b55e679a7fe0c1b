#include <algorithm>
#include <sstream>

#include "s2t/common.hpp"
#include "s2t/corpus.hpp"
#include "s2t/eval.hpp"
#include "stopwords_data.hpp"

namespace s2t::eval {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = [] {
    std::set<std::string> out;
    std::istringstream in(detail::kStopwordsText);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      out.insert(line);
    }
    return out;
  }();
  return words;
}

bool is_content_word(std::string_view token) {
  return corpus::utf8_chars(token).size() > 5 && stopwords().count(std::string(token)) == 0;
}

FreqBucket frequency_bucket(int64_t train_count) {
  if (train_count <= 10) return FreqBucket::rare;
  if (train_count >= 25 && train_count <= 100) return FreqBucket::medium;
  if (train_count >= 150) return FreqBucket::frequent;
  return FreqBucket::none;
}

std::string_view to_string(FreqBucket bucket) {
  switch (bucket) {
    case FreqBucket::rare: return "rare";
    case FreqBucket::medium: return "medium";
    case FreqBucket::frequent: return "frequent";
    case FreqBucket::none: return "none";
  }
  return "?";
}

namespace {

std::map<std::string, int64_t> bag(const Tokens& toks) {
  std::map<std::string, int64_t> out;
  for (const auto& t : toks) ++out[t];
  return out;
}

int64_t train_count(const TokenCounts& counts, const std::string& tok) {
  auto it = counts.find(tok);
  return it == counts.end() ? 0 : it->second;
}

double ratio(int64_t num, int64_t den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

}  // namespace

BucketReport freq_bucket_report(const std::vector<Tokens>& hyps, const ReferenceSet& refs,
                                const TokenCounts& train_counts) {
  check_inputs(hyps, refs, "freq_bucket_report");
  BucketReport rep;
  auto stats_for = [&](FreqBucket b) -> BucketStats* {
    switch (b) {
      case FreqBucket::rare: return &rep.rare;
      case FreqBucket::medium: return &rep.medium;
      case FreqBucket::frequent: return &rep.frequent;
      case FreqBucket::none: return nullptr;
    }
    return nullptr;
  };
  for (size_t u = 0; u < hyps.size(); ++u) {
    const auto hyp_bag = bag(hyps[u]);
    std::map<std::string, int64_t> max_ref;
    std::vector<std::map<std::string, int64_t>> ref_bags;
    for (const auto& r : refs[u]) {
      ref_bags.push_back(bag(r));
      for (const auto& [t, c] : ref_bags.back()) max_ref[t] = std::max(max_ref[t], c);
    }
    for (const auto& [tok, c] : hyp_bag) {
      if (!is_content_word(tok)) continue;
      rep.content_hyp_tokens += c;
      auto* s = stats_for(frequency_bucket(train_count(train_counts, tok)));
      if (!s) {
        rep.gap_hyp_tokens += c;
        continue;
      }
      s->hyp_tokens += c;
      auto it = max_ref.find(tok);
      if (it != max_ref.end()) s->true_positives += std::min(c, it->second);
    }
    for (const auto& rb : ref_bags) {
      for (const auto& [tok, c] : rb) {
        if (!is_content_word(tok)) continue;
        rep.content_ref_tokens += c;
        auto* s = stats_for(frequency_bucket(train_count(train_counts, tok)));
        if (!s) {
          rep.gap_ref_tokens += c;
          continue;
        }
        s->ref_tokens += c;
        auto it = hyp_bag.find(tok);
        if (it != hyp_bag.end()) s->recalled += std::min(c, it->second);
      }
    }
  }
  for (auto* s : {&rep.rare, &rep.medium, &rep.frequent}) {
    s->precision = ratio(s->true_positives, s->hyp_tokens);
    s->recall = ratio(s->recalled, s->ref_tokens);
  }
  return rep;
}

OovReport oov_report(const std::vector<Tokens>& hyps, const TokenCounts& train_counts, const ReferenceSet& refs) {
  check_inputs(hyps, refs, "oov_report");
  OovReport rep;
  std::set<std::string> hyp_types, ref_types;
  for (size_t u = 0; u < hyps.size(); ++u) {
    const auto hyp_bag = bag(hyps[u]);
    for (const auto& [tok, c] : hyp_bag) {
      if (train_counts.count(tok)) continue;
      rep.hyp_tokens += c;
      hyp_types.insert(tok);
    }
    for (const auto& r : refs[u]) {
      for (const auto& [tok, c] : bag(r)) {
        if (train_counts.count(tok)) continue;
        rep.ref_tokens += c;
        ref_types.insert(tok);
        auto it = hyp_bag.find(tok);
        if (it != hyp_bag.end()) rep.ref_recovered += std::min(c, it->second);
      }
    }
  }
  rep.hyp_types = static_cast<int64_t>(hyp_types.size());
  rep.ref_types = static_cast<int64_t>(ref_types.size());
  return rep;
}

EvalReport evaluate(const std::vector<Tokens>& hyps, const ReferenceSet& refs, const MatchResources& resources,
                    const TokenCounts* train_counts, const EvalOptions& options) {
  EvalReport rep;
  rep.bleu = bleu_corpus(hyps, refs, {options.bleu_max_n, false});
  rep.meteor = meteor_score(hyps, refs, resources, options.meteor);
  size_t hyp_tokens = 0;
  for (const auto& h : hyps) hyp_tokens += h.size();
  // A model that emits only EOS still gets a report; precision is 0 then.
  rep.precision_unigram = hyp_tokens > 0 ? unigram_precision(hyps, refs) : 0.0;
  rep.recall_staged = rep.meteor.recall;
  rep.recall_exact = unigram_recall(hyps, refs, resources, StageWeights::exact_only());
  if (train_counts) {
    rep.has_train_counts = true;
    rep.buckets = freq_bucket_report(hyps, refs, *train_counts);
    rep.oov = oov_report(hyps, *train_counts, refs);
  }
  return rep;
}

namespace {

nlohmann::json bucket_json(const BucketStats& s) {
  return {{"precision", s.precision}, {"recall", s.recall},   {"hyp_tokens", s.hyp_tokens},
          {"true_positives", s.true_positives}, {"ref_tokens", s.ref_tokens}, {"recalled", s.recalled}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["bleu"] = r.bleu.score;
  j["precisions"] = r.bleu.precisions;
  j["bp"] = r.bleu.bp;
  j["meteor"] = {{"score", r.meteor.score},
                 {"precision", r.meteor.precision},
                 {"recall", r.meteor.recall},
                 {"fragmentation", r.meteor.fragmentation}};
  j["precision_unigram"] = r.precision_unigram;
  j["recall_staged"] = r.recall_staged;
  j["recall_exact"] = r.recall_exact;
  j["buckets"] = {{"rare", bucket_json(r.buckets.rare)},
                  {"medium", bucket_json(r.buckets.medium)},
                  {"frequent", bucket_json(r.buckets.frequent)}};
  j["oov"] = {{"hyp_types", r.oov.hyp_types},
              {"hyp_tokens", r.oov.hyp_tokens},
              {"ref_types", r.oov.ref_types},
              {"ref_tokens", r.oov.ref_tokens},
              {"ref_recovered", r.oov.ref_recovered}};
  return j;
}

}  // namespace s2t::eval
