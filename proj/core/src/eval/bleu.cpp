#include <algorithm>
#include <cmath>
#include <map>

#include "s2t/common.hpp"
#include "s2t/eval.hpp"

namespace s2t::eval {

void check_inputs(const std::vector<Tokens>& hyps, const ReferenceSet& refs, std::string_view what) {
  if (refs.empty()) throw InvalidArgument(std::string(what) + ": empty reference set");
  if (hyps.size() != refs.size()) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(hyps.size()) + " hypotheses but " +
                          std::to_string(refs.size()) + " reference entries");
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].empty()) throw InvalidArgument(std::string(what) + ": utterance " + std::to_string(i) + " has no reference");
  }
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int64_t>;

NgramCounts ngrams(const Tokens& toks, int n) {
  NgramCounts out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<ptrdiff_t>(i),
                                   toks.begin() + static_cast<ptrdiff_t>(i + n))];
  }
  return out;
}

// Clip each hypothesis n-gram count by its max count in any reference.
int64_t clipped_matches(const Tokens& hyp, const std::vector<Tokens>& refs, int n) {
  const auto h = ngrams(hyp, n);
  NgramCounts max_ref;
  for (const auto& r : refs) {
    for (const auto& [g, c] : ngrams(r, n)) {
      auto& m = max_ref[g];
      m = std::max(m, c);
    }
  }
  int64_t total = 0;
  for (const auto& [g, c] : h) {
    auto it = max_ref.find(g);
    if (it != max_ref.end()) total += std::min(c, it->second);
  }
  return total;
}

int64_t closest_ref_length(size_t hyp_len, const std::vector<Tokens>& refs) {
  int64_t best = -1;
  for (const auto& r : refs) {
    const auto len = static_cast<int64_t>(r.size());
    if (best < 0) {
      best = len;
      continue;
    }
    const auto d = std::llabs(len - static_cast<int64_t>(hyp_len));
    const auto bd = std::llabs(best - static_cast<int64_t>(hyp_len));
    if (d < bd || (d == bd && len < best)) best = len;
  }
  return best;
}

}  // namespace

BleuResult bleu_corpus(const std::vector<Tokens>& hyps, const ReferenceSet& refs, const BleuOptions& options) {
  check_inputs(hyps, refs, "bleu");
  if (options.max_n < 1) throw InvalidArgument("bleu: max_n must be >= 1");
  BleuResult res;
  res.matches.assign(static_cast<size_t>(options.max_n), 0);
  res.totals.assign(static_cast<size_t>(options.max_n), 0);
  for (size_t u = 0; u < hyps.size(); ++u) {
    const auto& hyp = hyps[u];
    res.hyp_length += static_cast<int64_t>(hyp.size());
    res.ref_length += closest_ref_length(hyp.size(), refs[u]);
    for (int n = 1; n <= options.max_n; ++n) {
      res.matches[n - 1] += clipped_matches(hyp, refs[u], n);
      res.totals[n - 1] += std::max<int64_t>(0, static_cast<int64_t>(hyp.size()) - n + 1);
    }
  }
  bool any_zero = false;
  double log_sum = 0.0;
  for (int n = 0; n < options.max_n; ++n) {
    const double p = res.totals[n] > 0 ? static_cast<double>(res.matches[n]) / static_cast<double>(res.totals[n]) : 0.0;
    res.precisions.push_back(p);
    if (p == 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (options.force_bp_one) {
    res.bp = 1.0;
  } else if (res.hyp_length == 0) {
    res.bp = 0.0;
  } else if (res.hyp_length < res.ref_length) {
    res.bp = std::exp(1.0 - static_cast<double>(res.ref_length) / static_cast<double>(res.hyp_length));
  } else {
    res.bp = 1.0;
  }
  const double geo = options.max_n == 1 ? res.precisions[0] : std::exp(log_sum / options.max_n);
  res.score = any_zero ? 0.0 : 100.0 * res.bp * geo;
  return res;
}

double unigram_precision(const std::vector<Tokens>& hyps, const ReferenceSet& refs) {
  check_inputs(hyps, refs, "unigram_precision");
  int64_t tp = 0, total = 0;
  for (size_t u = 0; u < hyps.size(); ++u) {
    tp += clipped_matches(hyps[u], refs[u], 1);
    total += static_cast<int64_t>(hyps[u].size());
  }
  if (total == 0) throw InvalidArgument("unigram_precision: no hypothesis tokens");
  return static_cast<double>(tp) / static_cast<double>(total);
}

}  // namespace s2t::eval
