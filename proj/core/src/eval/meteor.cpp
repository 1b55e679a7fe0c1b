#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "s2t/common.hpp"
#include "s2t/eval.hpp"

namespace s2t::eval {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::exact: return "exact";
    case Stage::stem: return "stem";
    case Stage::synonym: return "synonym";
    case Stage::paraphrase: return "paraphrase";
  }
  return "?";
}

double StageWeights::of(Stage stage) const {
  switch (stage) {
    case Stage::exact: return exact;
    case Stage::stem: return stem;
    case Stage::synonym: return synonym;
    case Stage::paraphrase: return paraphrase;
  }
  return 0.0;
}

void StageWeights::validate() const {
  for (double w : {exact, stem, synonym, paraphrase}) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("stage weights must lie in [0, 1]");
  }
}

void MeteorParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("meteor alpha must lie in [0, 1]");
  if (!(beta >= 0.0)) throw InvalidArgument("meteor beta must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("meteor gamma must lie in [0, 1]");
  weights.validate();
}

EquivalenceTable EquivalenceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open equivalence table: " + path.string());
  EquivalenceTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> members;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) {
      if (!field.empty()) members.push_back(field);
    }
    table.add_group(members);
  }
  return table;
}

void EquivalenceTable::add_group(const std::vector<std::string>& members) {
  if (members.size() < 2) return;
  const int id = next_group_++;
  for (const auto& m : members) {
    auto& ids = groups_[m];
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  }
}

bool EquivalenceTable::equivalent(std::string_view a, std::string_view b) const {
  auto ia = groups_.find(std::string(a));
  auto ib = groups_.find(std::string(b));
  if (ia == groups_.end() || ib == groups_.end()) return false;
  const auto& x = ia->second;
  const auto& y = ib->second;
  size_t p = 0, q = 0;
  while (p < x.size() && q < y.size()) {
    if (x[p] == y[q]) return true;
    if (x[p] < y[q]) ++p; else ++q;
  }
  return false;
}

bool match_stage(std::string_view hyp, std::string_view ref, const MatchResources& resources,
                 const AlignOptions& options, Stage& stage) {
  if (hyp == ref) {
    stage = Stage::exact;
    return true;
  }
  if (options.use_stem && porter_stem(hyp) == porter_stem(ref)) {
    stage = Stage::stem;
    return true;
  }
  if (options.use_synonym && resources.synonyms.equivalent(hyp, ref)) {
    stage = Stage::synonym;
    return true;
  }
  if (options.use_paraphrase && resources.paraphrases.equivalent(hyp, ref)) {
    stage = Stage::paraphrase;
    return true;
  }
  return false;
}

int count_chunks(const std::vector<AlignedPair>& pairs) {
  int chunks = 0;
  for (size_t k = 0; k < pairs.size(); ++k) {
    if (k == 0 || pairs[k].hyp != pairs[k - 1].hyp + 1 || pairs[k].ref != pairs[k - 1].ref + 1) ++chunks;
  }
  return chunks;
}

namespace {

struct Edge {
  int ref;
  Stage stage;
};

struct Key {
  int chunks = 0;
  int crossings = 0;
  int stage_sum = 0;
};

bool key_less(const Key& a, const Key& b) {
  if (a.chunks != b.chunks) return a.chunks < b.chunks;
  if (a.crossings != b.crossings) return a.crossings < b.crossings;
  return a.stage_sum < b.stage_sum;
}

bool key_equal(const Key& a, const Key& b) {
  return a.chunks == b.chunks && a.crossings == b.crossings && a.stage_sum == b.stage_sum;
}

class Aligner {
 public:
  Aligner(std::vector<std::vector<Edge>> edges, int n_ref, int64_t budget)
      : edges_(std::move(edges)), n_hyp_(static_cast<int>(edges_.size())), n_ref_(n_ref), budget_(budget) {}

  Alignment run() {
    target_ = max_cardinality();
    Alignment out;
    if (target_ == 0) return out;
    // Seed the incumbent with the augmenting-path matching.
    best_assign_ = seed_;
    best_key_ = evaluate(best_assign_);
    assign_.assign(static_cast<size_t>(n_hyp_), -1);
    stage_of_.assign(static_cast<size_t>(n_hyp_), Stage::exact);
    used_.assign(static_cast<size_t>(n_ref_), 0);
    search(0, 0, Key{}, -2, -2);
    for (int i = 0; i < n_hyp_; ++i) {
      if (best_assign_[i] >= 0) out.pairs.push_back({i, best_assign_[i], stage_for(i, best_assign_[i])});
    }
    out.chunks = best_key_.chunks;
    out.crossings = best_key_.crossings;
    out.exhaustive = !exhausted_;
    return out;
  }

 private:
  std::vector<std::vector<Edge>> edges_;
  int n_hyp_, n_ref_;
  int64_t budget_;
  int64_t nodes_ = 0;
  bool exhausted_ = false;
  int target_ = 0;
  std::vector<int> seed_, assign_, best_assign_;
  std::vector<Stage> stage_of_;
  std::vector<char> used_;
  Key best_key_;

  Stage stage_for(int i, int j) const {
    for (const auto& e : edges_[i]) {
      if (e.ref == j) return e.stage;
    }
    return Stage::exact;
  }

  bool augment(int i, std::vector<int>& ref_owner, std::vector<char>& seen) {
    for (const auto& e : edges_[i]) {
      if (seen[e.ref]) continue;
      seen[e.ref] = 1;
      if (ref_owner[e.ref] < 0 || augment(ref_owner[e.ref], ref_owner, seen)) {
        ref_owner[e.ref] = i;
        return true;
      }
    }
    return false;
  }

  int max_cardinality() {
    std::vector<int> ref_owner(static_cast<size_t>(n_ref_), -1);
    int count = 0;
    for (int i = 0; i < n_hyp_; ++i) {
      std::vector<char> seen(static_cast<size_t>(n_ref_), 0);
      if (augment(i, ref_owner, seen)) ++count;
    }
    seed_.assign(static_cast<size_t>(n_hyp_), -1);
    for (int j = 0; j < n_ref_; ++j) {
      if (ref_owner[j] >= 0) seed_[ref_owner[j]] = j;
    }
    return count;
  }

  Key evaluate(const std::vector<int>& assign) const {
    std::vector<AlignedPair> pairs;
    Key key;
    for (int i = 0; i < n_hyp_; ++i) {
      if (assign[i] < 0) continue;
      for (const auto& p : pairs) {
        if (p.ref > assign[i]) ++key.crossings;
      }
      const Stage s = stage_for(i, assign[i]);
      key.stage_sum += static_cast<int>(s);
      pairs.push_back({i, assign[i], s});
    }
    key.chunks = count_chunks(pairs);
    return key;
  }

  // Hypothesis positions from i onwards that still have a free candidate.
  int remaining_capacity(int i) const {
    int hyp_side = 0;
    for (int k = i; k < n_hyp_; ++k) {
      for (const auto& e : edges_[k]) {
        if (!used_[e.ref]) {
          ++hyp_side;
          break;
        }
      }
    }
    int free_refs = 0;
    for (char u : used_) free_refs += u ? 0 : 1;
    return std::min(hyp_side, free_refs);
  }

  // (chunks, crossings, stage sum) never decrease along a branch.
  bool dominated(const Key& k) const {
    if (k.chunks != best_key_.chunks) return k.chunks > best_key_.chunks;
    if (k.crossings != best_key_.crossings) return k.crossings > best_key_.crossings;
    return k.stage_sum > best_key_.stage_sum;
  }

  void offer(const Key& key) {
    std::vector<int> full = assign_;
    if (key_less(key, best_key_) || (key_equal(key, best_key_) && full < best_assign_)) {
      best_key_ = key;
      best_assign_ = std::move(full);
    }
  }

  void search(int i, int matched, Key key, int last_hyp, int last_ref) {
    if (exhausted_) return;
    if (++nodes_ > budget_) {
      exhausted_ = true;
      return;
    }
    if (dominated(key)) return;
    if (matched == target_) {
      offer(key);
      return;
    }
    if (i == n_hyp_) return;
    if (matched + remaining_capacity(i) < target_) return;

    auto try_edge = [&](const Edge& e) {
      if (used_[e.ref]) return;
      Key next = key;
      const bool extends = last_hyp == i - 1 && last_ref == e.ref - 1;
      if (!extends) ++next.chunks;
      for (int k = 0; k < i; ++k) {
        if (assign_[k] > e.ref) ++next.crossings;
      }
      next.stage_sum += static_cast<int>(e.stage);
      used_[e.ref] = 1;
      assign_[i] = e.ref;
      search(i + 1, matched + 1, next, i, e.ref);
      assign_[i] = -1;
      used_[e.ref] = 0;
    };
    // Continuing the current chunk first tends to find good incumbents early.
    for (const auto& e : edges_[i]) {
      if (last_hyp == i - 1 && e.ref == last_ref + 1) try_edge(e);
    }
    for (const auto& e : edges_[i]) {
      if (!(last_hyp == i - 1 && e.ref == last_ref + 1)) try_edge(e);
    }
    search(i + 1, matched, key, last_hyp, last_ref);
  }
};

}  // namespace

Alignment align_matches(const Tokens& hyp, const Tokens& ref, const MatchResources& resources,
                        const AlignOptions& options) {
  std::vector<std::vector<Edge>> edges(hyp.size());
  for (size_t i = 0; i < hyp.size(); ++i) {
    for (size_t j = 0; j < ref.size(); ++j) {
      Stage s;
      if (match_stage(hyp[i], ref[j], resources, options, s)) edges[i].push_back({static_cast<int>(j), s});
    }
  }
  return Aligner(std::move(edges), static_cast<int>(ref.size()), options.node_budget).run();
}

MeteorResult meteor_from_totals(double weighted_matches, int64_t matches, int64_t chunks, int64_t hyp_length,
                                int64_t ref_length, const MeteorParams& params) {
  MeteorResult r;
  r.weighted_matches = weighted_matches;
  r.matches = matches;
  r.chunks = chunks;
  r.hyp_length = hyp_length;
  r.ref_length = ref_length;
  if (matches == 0 || weighted_matches <= 0.0) return r;
  r.precision = hyp_length > 0 ? weighted_matches / static_cast<double>(hyp_length) : 0.0;
  r.recall = ref_length > 0 ? weighted_matches / static_cast<double>(ref_length) : 0.0;
  const double denom = params.alpha * r.precision + (1.0 - params.alpha) * r.recall;
  r.fmean = denom > 0.0 ? r.precision * r.recall / denom : 0.0;
  r.fragmentation = static_cast<double>(chunks) / static_cast<double>(matches);
  r.penalty = params.gamma * std::pow(r.fragmentation, params.beta);
  r.score = r.fmean * (1.0 - r.penalty);
  return r;
}

MeteorResult meteor_score(const std::vector<Tokens>& hyps, const ReferenceSet& refs, const MatchResources& resources,
                          const MeteorParams& params) {
  check_inputs(hyps, refs, "meteor");
  params.validate();
  AlignOptions opts;
  opts.use_stem = params.weights.stem > 0.0;
  opts.use_synonym = params.weights.synonym > 0.0;
  opts.use_paraphrase = params.weights.paraphrase > 0.0;

  double wm = 0.0;
  int64_t m = 0, ch = 0, hl = 0, rl = 0;
  for (size_t u = 0; u < hyps.size(); ++u) {
    MeteorResult best;
    bool have = false;
    for (const auto& ref : refs[u]) {
      if (ref.empty()) throw InvalidArgument("meteor: empty reference for utterance " + std::to_string(u));
      const auto al = align_matches(hyps[u], ref, resources, opts);
      double w = 0.0;
      for (const auto& p : al.pairs) w += params.weights.of(p.stage);
      const auto cand = meteor_from_totals(w, static_cast<int64_t>(al.pairs.size()), al.chunks,
                                           static_cast<int64_t>(hyps[u].size()), static_cast<int64_t>(ref.size()),
                                           params);
      if (!have || cand.score > best.score) {
        best = cand;
        have = true;
      }
    }
    wm += best.weighted_matches;
    m += best.matches;
    ch += best.chunks;
    hl += best.hyp_length;
    rl += best.ref_length;
  }
  return meteor_from_totals(wm, m, ch, hl, rl, params);
}

double unigram_recall(const std::vector<Tokens>& hyps, const ReferenceSet& refs, const MatchResources& resources,
                      const StageWeights& weights) {
  MeteorParams params;
  params.weights = weights;
  return meteor_score(hyps, refs, resources, params).recall;
}

}  // namespace s2t::eval
