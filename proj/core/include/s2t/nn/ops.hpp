#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s2t/nn/tape.hpp"

// Differentiable operations on 2-D values. Batched sequence data uses a
// time-major row layout: row (t * batch + b) holds step t of sequence b.
namespace s2t::nn {

template <typename T> Var matmul(Tape<T>& tape, Var a, Var b);
// x W + b over the last axis; b is 1 x D_out.
template <typename T> Var affine(Tape<T>& tape, Var x, Var w, Var b);
template <typename T> Var add(Tape<T>& tape, Var a, Var b);
template <typename T> Var mul(Tape<T>& tape, Var a, Var b);
template <typename T> Var scale(Tape<T>& tape, Var a, T factor);
// Elementwise product with a constant (dropout masks, padding masks).
template <typename T> Var mul_const(Tape<T>& tape, Var a, const Matrix<T>& mask);
template <typename T> Var sigmoid(Tape<T>& tape, Var a);
template <typename T> Var tanh(Tape<T>& tape, Var a);
template <typename T> Var relu(Tape<T>& tape, Var a);
template <typename T> Var sum(Tape<T>& tape, Var a);
template <typename T> Var concat_cols(Tape<T>& tape, std::span<const Var> parts);
template <typename T> Var slice_cols(Tape<T>& tape, Var a, int start, int count);
template <typename T> Var concat_rows(Tape<T>& tape, std::span<const Var> parts);
template <typename T> Var slice_rows(Tape<T>& tape, Var a, int start, int count);

// Row gather from a V x E table. Gradients accumulate into the gathered rows
// only; `frozen_row` (if >= 0) never receives gradient.
template <typename T>
Var gather_rows(Tape<T>& tape, Var table, std::span<const int> ids, int frozen_row = -1);

// Fused LSTM cell. `gates` is B x 4H pre-activations in [i | f | g | o]
// order, `cell` is B x H. Returns B x 2H holding [h' | c'].
template <typename T> Var lstm_cell(Tape<T>& tape, Var gates, Var cell);

// Row r of the result is `fresh` row r where keep[r] != 0, else `held` row r.
template <typename T>
Var blend_rows(Tape<T>& tape, std::span<const uint8_t> keep, Var fresh, Var held);

// Image layout for convolution: rows ((b * time) + t) * freq + f, one column
// per channel.
struct ConvGeometry {
  int batch = 0;
  int time = 0;
  int freq = 0;
  bool operator==(const ConvGeometry&) const = default;
};

struct ConvResult {
  Var out;
  ConvGeometry geometry;
};

// 3x3 same-padded convolution with stride (stride_t, stride_f) followed by
// ReLU. Filters are (3*3*C_in) x C_out with row index (kt*3 + kf)*C_in + c.
// Output extent is ceil(in / stride) per axis. When `time_lengths` is given,
// outputs at time steps >= ceil(length / stride_t) are zeroed so padded
// frames never leak into real ones downstream.
template <typename T>
ConvResult conv2d_relu(Tape<T>& tape, Var input, ConvGeometry geometry, Var filters, Var bias,
                       int stride_t, int stride_f, const std::vector<int>* time_lengths = nullptr);

// Image layout -> time-major rows (t * batch + b), columns f * C + c.
template <typename T> Var to_time_major(Tape<T>& tape, Var image, ConvGeometry geometry);

// scores[b][s] = query[b] . keys[s * B + b]; returns B x S.
template <typename T> Var attention_scores(Tape<T>& tape, Var query, Var keys, int steps);
// Row-wise softmax over the first lengths[b] columns; remaining entries are 0.
template <typename T> Var masked_softmax(Tape<T>& tape, Var scores, std::span<const int> lengths);
// context[b] = sum_s weights[b][s] * values[s * B + b]; returns B x H.
template <typename T> Var attention_context(Tape<T>& tape, Var weights, Var values, int steps);

// Mean cross-entropy over rows with mask != 0. Throws when every row is masked.
template <typename T>
Var softmax_xent(Tape<T>& tape, Var logits, std::span<const int> targets, std::span<const T> mask);

// Keep-mask with entries 0 or 1/(1-ratio).
template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double ratio, uint64_t seed);

// Training mode multiplies by a seeded keep-mask; eval mode (or ratio 0)
// returns `x` unchanged.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double ratio, bool training, uint64_t seed);

// Numerically stable row-wise log-softmax (no gradient).
template <typename T> Matrix<T> log_softmax_rows(const Matrix<T>& logits);

}  // namespace s2t::nn
