#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "s2t/eval.hpp"

namespace {

using s2t::eval::ReferenceSet;
using s2t::eval::Tokens;

struct Corpus {
  std::vector<Tokens> hyps;
  ReferenceSet refs;
};

Corpus random_corpus(int n_utts, int len, int n_refs) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> word(0, 199);
  auto sentence = [&] {
    Tokens t;
    for (int i = 0; i < len; ++i) t.push_back("w" + std::to_string(word(rng)));
    return t;
  };
  Corpus c;
  for (int i = 0; i < n_utts; ++i) {
    c.hyps.push_back(sentence());
    std::vector<Tokens> rs;
    for (int r = 0; r < n_refs; ++r) rs.push_back(sentence());
    c.refs.push_back(rs);
  }
  return c;
}

void BM_Bleu(benchmark::State& state) {
  const auto c = random_corpus(static_cast<int>(state.range(0)), 20, 4);
  for (auto _ : state) benchmark::DoNotOptimize(s2t::eval::bleu_corpus(c.hyps, c.refs));
}
BENCHMARK(BM_Bleu)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Meteor(benchmark::State& state) {
  const auto c = random_corpus(static_cast<int>(state.range(0)), 20, 4);
  for (auto _ : state) benchmark::DoNotOptimize(s2t::eval::meteor_score(c.hyps, c.refs));
}
BENCHMARK(BM_Meteor)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_PorterStem(benchmark::State& state) {
  const std::vector<std::string> words = {"generalizations", "running", "caresses", "relational", "hopefulness"};
  for (auto _ : state) {
    for (const auto& w : words) benchmark::DoNotOptimize(s2t::eval::porter_stem(w));
  }
}
BENCHMARK(BM_PorterStem);

}  // namespace
