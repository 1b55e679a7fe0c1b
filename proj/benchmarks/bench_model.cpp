#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "s2t/infer.hpp"
#include "s2t/model.hpp"

namespace {

using namespace s2t;

model::ModelConfig bench_config(int hidden) {
  model::ModelConfig c;
  c.n_mels = 40;
  c.cnn_filters = 16;
  c.enc_layers = 1;
  c.enc_hidden = hidden;
  c.dec_layers = 1;
  c.dec_hidden = hidden;
  c.emb_dim = 64;
  c.vocab_size = 200;
  c.dropout = 0.0;
  return c;
}

nn::Matrix<float> random_matrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nn::Matrix<float> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// One bidirectional encoder layer over `steps` x batch 8, forward and backward.
void BM_LstmForwardBackward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const int steps = static_cast<int>(state.range(1));
  constexpr int kBatch = 8;
  const auto cfg = bench_config(hidden);
  auto params = model::init_params<float>(cfg, 1);
  const auto x = random_matrix(static_cast<Eigen::Index>(steps) * kBatch, cfg.encoder_input_dim(), 2);
  const std::vector<int> lengths(kBatch, steps);
  for (auto _ : state) {
    nn::Tape<float> tape;
    auto out = model::lstm_sequence(tape, params, "enc.lstm", tape.constant(x), steps, kBatch, lengths,
                                    model::Direction::bi, 1, hidden);
    tape.backward(nn::sum(tape, out));
    params.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * steps * kBatch);
}
BENCHMARK(BM_LstmForwardBackward)->Args({64, 50})->Args({256, 50})->Unit(benchmark::kMillisecond);

void BM_BeamDecode(benchmark::State& state) {
  const auto cfg = bench_config(128);
  const auto params = model::init_params<float>(cfg, 3);
  features::FeatureMatrix feats(200, cfg.n_mels);
  const auto m = random_matrix(200, cfg.n_mels, 4);
  for (int t = 0; t < 200; ++t) {
    for (int k = 0; k < cfg.n_mels; ++k) feats.values[static_cast<size_t>(t * cfg.n_mels + k)] = m(t, k);
  }
  const int beam = static_cast<int>(state.range(0));
  for (auto _ : state) {
    infer::DecoderSession<float> session(params, cfg, feats);
    benchmark::DoNotOptimize(infer::beam_decode(session, beam, 20));
  }
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
