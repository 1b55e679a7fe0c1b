#include "s2t/nn/ops.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>

namespace s2t::nn {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw InvalidArgument(std::string(op) + ": " + what);
}

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  require(A.cols() == B.rows(), "matmul", dims(A.rows(), A.cols()) + " by " + dims(B.rows(), B.cols()));
  Matrix<T> out = A * B;
  return tape.push(std::move(out), {a, b}, [a, b](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    if (auto* ga = t.grad_buffer(a)) ga->noalias() += g * t.value(b).transpose();
    if (auto* gb = t.grad_buffer(b)) gb->noalias() += t.value(a).transpose() * g;
  });
}

template <typename T>
Var affine(Tape<T>& tape, Var x, Var w, Var b) {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  const auto& bias = tape.value(b);
  require(X.cols() == W.rows(), "affine", dims(X.rows(), X.cols()) + " by " + dims(W.rows(), W.cols()));
  require(bias.rows() == 1 && bias.cols() == W.cols(), "affine", "bias must be 1x" + std::to_string(W.cols()));
  Matrix<T> out = X * W;
  out.rowwise() += bias.row(0);
  return tape.push(std::move(out), {x, w, b}, [x, w, b](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    if (auto* gx = t.grad_buffer(x)) gx->noalias() += g * t.value(w).transpose();
    if (auto* gw = t.grad_buffer(w)) gw->noalias() += t.value(x).transpose() * g;
    if (auto* gb = t.grad_buffer(b)) *gb += g.colwise().sum();
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "add", dims(A.rows(), A.cols()) + " vs " + dims(B.rows(), B.cols()));
  Matrix<T> out = A + B;
  return tape.push(std::move(out), {a, b}, [a, b](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    if (auto* ga = t.grad_buffer(a)) *ga += g;
    if (auto* gb = t.grad_buffer(b)) *gb += g;
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "mul", dims(A.rows(), A.cols()) + " vs " + dims(B.rows(), B.cols()));
  Matrix<T> out = A.cwiseProduct(B);
  return tape.push(std::move(out), {a, b}, [a, b](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    if (auto* ga = t.grad_buffer(a)) *ga += g.cwiseProduct(t.value(b));
    if (auto* gb = t.grad_buffer(b)) *gb += g.cwiseProduct(t.value(a));
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T factor) {
  Matrix<T> out = tape.value(a) * factor;
  return tape.push(std::move(out), {a}, [a, factor](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) *ga += t.grad_of_self(self) * factor;
  });
}

template <typename T>
Var mul_const(Tape<T>& tape, Var a, const Matrix<T>& mask) {
  const auto& A = tape.value(a);
  require(A.rows() == mask.rows() && A.cols() == mask.cols(), "mul_const", "mask shape mismatch");
  Matrix<T> out = A.cwiseProduct(mask);
  auto m = std::make_shared<Matrix<T>>(mask);
  return tape.push(std::move(out), {a}, [a, m](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) *ga += t.grad_of_self(self).cwiseProduct(*m);
  });
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var a) {
  Matrix<T> out = tape.value(a).unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
  return tape.push(std::move(out), {a}, [a](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) {
      const auto& y = t.value(Var{self});
      *ga += t.grad_of_self(self).cwiseProduct(y.cwiseProduct((T(1) - y.array()).matrix()));
    }
  });
}

template <typename T>
Var tanh(Tape<T>& tape, Var a) {
  Matrix<T> out = tape.value(a).array().tanh().matrix();
  return tape.push(std::move(out), {a}, [a](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) {
      const auto& y = t.value(Var{self});
      *ga += (t.grad_of_self(self).array() * (T(1) - y.array().square())).matrix();
    }
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var a) {
  Matrix<T> out = tape.value(a).cwiseMax(T(0));
  return tape.push(std::move(out), {a}, [a](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) {
      const auto& y = t.value(Var{self});
      *ga += (y.array() > T(0)).select(t.grad_of_self(self), T(0)).matrix();
    }
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var a) {
  Matrix<T> out(1, 1);
  out(0, 0) = tape.value(a).sum();
  return tape.push(std::move(out), {a}, [a](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) ga->array() += t.grad_of_self(self)(0, 0);
  });
}

template <typename T>
Var concat_cols(Tape<T>& tape, std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = tape.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(tape.value(p).rows() == rows, "concat_cols", "row count mismatch");
    cols += tape.value(p).cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index c0 = 0;
  for (Var p : parts) {
    const auto& v = tape.value(p);
    out.middleCols(c0, v.cols()) = v;
    c0 += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape.push(std::move(out), ps, [ps](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    Eigen::Index off = 0;
    for (Var p : ps) {
      const Eigen::Index w = t.value(p).cols();
      if (auto* gp = t.grad_buffer(p)) *gp += g.middleCols(off, w);
      off += w;
    }
  });
}

template <typename T>
Var slice_cols(Tape<T>& tape, Var a, int start, int count) {
  const auto& A = tape.value(a);
  require(start >= 0 && count >= 0 && start + count <= A.cols(), "slice_cols", "range out of bounds");
  Matrix<T> out = A.middleCols(start, count);
  return tape.push(std::move(out), {a}, [a, start, count](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) ga->middleCols(start, count) += t.grad_of_self(self);
  });
}

template <typename T>
Var concat_rows(Tape<T>& tape, std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = tape.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    require(tape.value(p).cols() == cols, "concat_rows", "column count mismatch");
    rows += tape.value(p).rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index r0 = 0;
  for (Var p : parts) {
    const auto& v = tape.value(p);
    out.middleRows(r0, v.rows()) = v;
    r0 += v.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape.push(std::move(out), ps, [ps](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    Eigen::Index off = 0;
    for (Var p : ps) {
      const Eigen::Index h = t.value(p).rows();
      if (auto* gp = t.grad_buffer(p)) *gp += g.middleRows(off, h);
      off += h;
    }
  });
}

template <typename T>
Var slice_rows(Tape<T>& tape, Var a, int start, int count) {
  const auto& A = tape.value(a);
  require(start >= 0 && count >= 0 && start + count <= A.rows(), "slice_rows", "range out of bounds");
  Matrix<T> out = A.middleRows(start, count);
  return tape.push(std::move(out), {a}, [a, start, count](Tape<T>& t, int self) {
    if (auto* ga = t.grad_buffer(a)) ga->middleRows(start, count) += t.grad_of_self(self);
  });
}

template <typename T>
Var gather_rows(Tape<T>& tape, Var table, std::span<const int> ids, int frozen_row) {
  const auto& W = tape.value(table);
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), W.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < W.rows(), "gather_rows",
            "id " + std::to_string(ids[i]) + " outside table of " + std::to_string(W.rows()) + " rows");
    out.row(static_cast<Eigen::Index>(i)) = W.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return tape.push(std::move(out), {table}, [table, idv, frozen_row](Tape<T>& t, int self) {
    auto* gw = t.grad_buffer(table);
    if (!gw) return;
    const auto& g = t.grad_of_self(self);
    for (size_t i = 0; i < idv.size(); ++i) {
      if (idv[i] == frozen_row) continue;
      gw->row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  });
}

template <typename T>
Var lstm_cell(Tape<T>& tape, Var gates, Var cell) {
  const auto& Z = tape.value(gates);
  const auto& C = tape.value(cell);
  const Eigen::Index H = C.cols();
  require(Z.cols() == 4 * H && Z.rows() == C.rows(), "lstm_cell",
          "gates " + dims(Z.rows(), Z.cols()) + " incompatible with cell " + dims(C.rows(), C.cols()));
  auto sig = [](T v) { return T(1) / (T(1) + std::exp(-v)); };
  Matrix<T> out(C.rows(), 2 * H);
  for (Eigen::Index r = 0; r < C.rows(); ++r) {
    for (Eigen::Index j = 0; j < H; ++j) {
      T i = sig(Z(r, j));
      T f = sig(Z(r, H + j));
      T g = std::tanh(Z(r, 2 * H + j));
      T o = sig(Z(r, 3 * H + j));
      T c = f * C(r, j) + i * g;
      out(r, j) = o * std::tanh(c);
      out(r, H + j) = c;
    }
  }
  return tape.push(std::move(out), {gates, cell}, [gates, cell, sig](Tape<T>& t, int self) {
    const auto& Z = t.value(gates);
    const auto& C = t.value(cell);
    const auto& Y = t.value(Var{self});
    const auto& G = t.grad_of_self(self);
    const Eigen::Index H = C.cols();
    auto* gz = t.grad_buffer(gates);
    auto* gc = t.grad_buffer(cell);
    for (Eigen::Index r = 0; r < C.rows(); ++r) {
      for (Eigen::Index j = 0; j < H; ++j) {
        T i = sig(Z(r, j));
        T f = sig(Z(r, H + j));
        T g = std::tanh(Z(r, 2 * H + j));
        T o = sig(Z(r, 3 * H + j));
        T tc = std::tanh(Y(r, H + j));
        T dh = G(r, j);
        T dc = G(r, H + j) + dh * o * (T(1) - tc * tc);
        if (gz) {
          (*gz)(r, j) += dc * g * i * (T(1) - i);
          (*gz)(r, H + j) += dc * C(r, j) * f * (T(1) - f);
          (*gz)(r, 2 * H + j) += dc * i * (T(1) - g * g);
          (*gz)(r, 3 * H + j) += dh * tc * o * (T(1) - o);
        }
        if (gc) (*gc)(r, j) += dc * f;
      }
    }
  });
}

template <typename T>
Var blend_rows(Tape<T>& tape, std::span<const uint8_t> keep, Var fresh, Var held) {
  const auto& A = tape.value(fresh);
  const auto& B = tape.value(held);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "blend_rows", "shape mismatch");
  require(static_cast<Eigen::Index>(keep.size()) == A.rows(), "blend_rows", "mask length mismatch");
  Matrix<T> out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) out.row(r) = keep[static_cast<size_t>(r)] ? A.row(r) : B.row(r);
  std::vector<uint8_t> k(keep.begin(), keep.end());
  return tape.push(std::move(out), {fresh, held}, [fresh, held, k](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    auto* ga = t.grad_buffer(fresh);
    auto* gb = t.grad_buffer(held);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (k[static_cast<size_t>(r)]) {
        if (ga) ga->row(r) += g.row(r);
      } else if (gb) {
        gb->row(r) += g.row(r);
      }
    }
  });
}

template <typename T>
ConvResult conv2d_relu(Tape<T>& tape, Var input, ConvGeometry geom, Var filters, Var bias,
                       int stride_t, int stride_f, const std::vector<int>* time_lengths) {
  const auto& X = tape.value(input);
  const auto& W = tape.value(filters);
  const auto& bvec = tape.value(bias);
  require(geom.batch > 0 && geom.time > 0 && geom.freq > 0, "conv2d_relu", "input dims must be positive");
  require(stride_t >= 1 && stride_f >= 1, "conv2d_relu", "strides must be >= 1");
  require(X.rows() == static_cast<Eigen::Index>(geom.batch) * geom.time * geom.freq, "conv2d_relu",
          "input rows do not match geometry");
  const Eigen::Index c_in = X.cols();
  require(W.rows() == 9 * c_in, "conv2d_relu",
          "channel mismatch: filters expect " + std::to_string(W.rows() / 9) + " input channels, got " +
              std::to_string(c_in));
  require(bvec.rows() == 1 && bvec.cols() == W.cols(), "conv2d_relu", "bias shape mismatch");
  if (time_lengths) {
    require(static_cast<int>(time_lengths->size()) == geom.batch, "conv2d_relu", "length vector size mismatch");
  }

  ConvGeometry og{geom.batch, (geom.time + stride_t - 1) / stride_t, (geom.freq + stride_f - 1) / stride_f};
  const Eigen::Index out_rows = static_cast<Eigen::Index>(og.batch) * og.time * og.freq;

  // im2col: one row per output position, 9*C_in taps; out-of-range taps are 0.
  auto cols = std::make_shared<Matrix<T>>(Matrix<T>::Zero(out_rows, 9 * c_in));
  for (int b = 0; b < og.batch; ++b) {
    for (int to = 0; to < og.time; ++to) {
      for (int fo = 0; fo < og.freq; ++fo) {
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * og.time + to) * og.freq + fo;
        for (int kt = 0; kt < 3; ++kt) {
          const int ti = to * stride_t + kt - 1;
          if (ti < 0 || ti >= geom.time) continue;
          for (int kf = 0; kf < 3; ++kf) {
            const int fi = fo * stride_f + kf - 1;
            if (fi < 0 || fi >= geom.freq) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(b) * geom.time + ti) * geom.freq + fi;
            cols->block(r, (kt * 3 + kf) * c_in, 1, c_in) = X.row(src);
          }
        }
      }
    }
  }
  Matrix<T> out = (*cols) * W;
  out.rowwise() += bvec.row(0);
  out = out.cwiseMax(T(0));
  std::vector<int> valid;
  if (time_lengths) {
    for (int b = 0; b < og.batch; ++b) {
      const int len = (time_lengths->at(static_cast<size_t>(b)) + stride_t - 1) / stride_t;
      valid.push_back(len);
      for (int to = len; to < og.time; ++to) {
        out.middleRows((static_cast<Eigen::Index>(b) * og.time + to) * og.freq, og.freq).setZero();
      }
    }
  }

  Var result = tape.push(std::move(out), {input, filters, bias},
      [input, filters, bias, geom, og, stride_t, stride_f, cols](Tape<T>& t, int self) {
        const auto& Y = t.value(Var{self});
        // ReLU and the length mask both zero outputs; either way no gradient.
        Matrix<T> g = (Y.array() > T(0)).select(t.grad_of_self(self), T(0));
        if (auto* gw = t.grad_buffer(filters)) gw->noalias() += cols->transpose() * g;
        if (auto* gb = t.grad_buffer(bias)) *gb += g.colwise().sum();
        if (auto* gx = t.grad_buffer(input)) {
          const Eigen::Index c_in = t.value(input).cols();
          Matrix<T> gcols = g * t.value(filters).transpose();
          for (int b = 0; b < og.batch; ++b) {
            for (int to = 0; to < og.time; ++to) {
              for (int fo = 0; fo < og.freq; ++fo) {
                const Eigen::Index r = (static_cast<Eigen::Index>(b) * og.time + to) * og.freq + fo;
                for (int kt = 0; kt < 3; ++kt) {
                  const int ti = to * stride_t + kt - 1;
                  if (ti < 0 || ti >= geom.time) continue;
                  for (int kf = 0; kf < 3; ++kf) {
                    const int fi = fo * stride_f + kf - 1;
                    if (fi < 0 || fi >= geom.freq) continue;
                    const Eigen::Index dst =
                        (static_cast<Eigen::Index>(b) * geom.time + ti) * geom.freq + fi;
                    gx->row(dst) += gcols.block(r, (kt * 3 + kf) * c_in, 1, c_in);
                  }
                }
              }
            }
          }
        }
      });
  return {result, og};
}

template <typename T>
Var to_time_major(Tape<T>& tape, Var image, ConvGeometry geom) {
  const auto& X = tape.value(image);
  require(X.rows() == static_cast<Eigen::Index>(geom.batch) * geom.time * geom.freq, "to_time_major",
          "rows do not match geometry");
  const Eigen::Index C = X.cols();
  Matrix<T> out(static_cast<Eigen::Index>(geom.time) * geom.batch, geom.freq * C);
  for (int b = 0; b < geom.batch; ++b) {
    for (int t = 0; t < geom.time; ++t) {
      for (int f = 0; f < geom.freq; ++f) {
        out.block(static_cast<Eigen::Index>(t) * geom.batch + b, f * C, 1, C) =
            X.row((static_cast<Eigen::Index>(b) * geom.time + t) * geom.freq + f);
      }
    }
  }
  return tape.push(std::move(out), {image}, [image, geom, C](Tape<T>& tp, int self) {
    auto* gx = tp.grad_buffer(image);
    if (!gx) return;
    const auto& g = tp.grad_of_self(self);
    for (int b = 0; b < geom.batch; ++b) {
      for (int t = 0; t < geom.time; ++t) {
        for (int f = 0; f < geom.freq; ++f) {
          gx->row((static_cast<Eigen::Index>(b) * geom.time + t) * geom.freq + f) +=
              g.block(static_cast<Eigen::Index>(t) * geom.batch + b, f * C, 1, C);
        }
      }
    }
  });
}

template <typename T>
Var attention_scores(Tape<T>& tape, Var query, Var keys, int steps) {
  const auto& Q = tape.value(query);
  const auto& K = tape.value(keys);
  const Eigen::Index B = Q.rows();
  require(K.rows() == steps * B && K.cols() == Q.cols(), "attention_scores",
          "keys " + dims(K.rows(), K.cols()) + " incompatible with query " + dims(Q.rows(), Q.cols()));
  Matrix<T> out(B, steps);
  for (int s = 0; s < steps; ++s) {
    for (Eigen::Index b = 0; b < B; ++b) out(b, s) = Q.row(b).dot(K.row(s * B + b));
  }
  return tape.push(std::move(out), {query, keys}, [query, keys, steps](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    const auto& Q = t.value(query);
    const auto& K = t.value(keys);
    const Eigen::Index B = Q.rows();
    auto* gq = t.grad_buffer(query);
    auto* gk = t.grad_buffer(keys);
    for (int s = 0; s < steps; ++s) {
      for (Eigen::Index b = 0; b < B; ++b) {
        if (gq) gq->row(b) += g(b, s) * K.row(s * B + b);
        if (gk) gk->row(s * B + b) += g(b, s) * Q.row(b);
      }
    }
  });
}

template <typename T>
Var masked_softmax(Tape<T>& tape, Var scores, std::span<const int> lengths) {
  const auto& S = tape.value(scores);
  require(static_cast<Eigen::Index>(lengths.size()) == S.rows(), "masked_softmax", "length vector size mismatch");
  Matrix<T> out = Matrix<T>::Zero(S.rows(), S.cols());
  for (Eigen::Index b = 0; b < S.rows(); ++b) {
    const int len = lengths[static_cast<size_t>(b)];
    require(len >= 1 && len <= S.cols(), "masked_softmax", "valid length out of range");
    const T mx = S.row(b).head(len).maxCoeff();
    T z = 0;
    for (int s = 0; s < len; ++s) {
      out(b, s) = std::exp(S(b, s) - mx);
      z += out(b, s);
    }
    out.row(b).head(len) /= z;
  }
  return tape.push(std::move(out), {scores}, [scores](Tape<T>& t, int self) {
    auto* gs = t.grad_buffer(scores);
    if (!gs) return;
    const auto& y = t.value(Var{self});
    const auto& g = t.grad_of_self(self);
    for (Eigen::Index b = 0; b < y.rows(); ++b) {
      const T dot = y.row(b).dot(g.row(b));
      gs->row(b) += (y.row(b).array() * (g.row(b).array() - dot)).matrix();
    }
  });
}

template <typename T>
Var attention_context(Tape<T>& tape, Var weights, Var values, int steps) {
  const auto& A = tape.value(weights);
  const auto& V = tape.value(values);
  const Eigen::Index B = A.rows();
  require(A.cols() == steps && V.rows() == steps * B, "attention_context", "shape mismatch");
  Matrix<T> out = Matrix<T>::Zero(B, V.cols());
  for (int s = 0; s < steps; ++s) {
    for (Eigen::Index b = 0; b < B; ++b) out.row(b) += A(b, s) * V.row(s * B + b);
  }
  return tape.push(std::move(out), {weights, values}, [weights, values, steps](Tape<T>& t, int self) {
    const auto& g = t.grad_of_self(self);
    const auto& A = t.value(weights);
    const auto& V = t.value(values);
    const Eigen::Index B = A.rows();
    auto* ga = t.grad_buffer(weights);
    auto* gv = t.grad_buffer(values);
    for (int s = 0; s < steps; ++s) {
      for (Eigen::Index b = 0; b < B; ++b) {
        if (ga) (*ga)(b, s) += g.row(b).dot(V.row(s * B + b));
        if (gv) gv->row(s * B + b) += A(b, s) * g.row(b);
      }
    }
  });
}

template <typename T>
Matrix<T> log_softmax_rows(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const T mx = logits.row(r).maxCoeff();
    const T lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

template <typename T>
Var softmax_xent(Tape<T>& tape, Var logits, std::span<const int> targets, std::span<const T> mask) {
  const auto& L = tape.value(logits);
  require(static_cast<Eigen::Index>(targets.size()) == L.rows() && mask.size() == targets.size(),
          "softmax_xent", "targets/mask must have one entry per logit row");
  T count = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (mask[i] == T(0)) continue;
    require(targets[i] >= 0 && targets[i] < L.cols(), "softmax_xent", "target id out of range");
    count += T(1);
  }
  require(count > T(0), "softmax_xent", "every position is masked");
  auto logp = std::make_shared<Matrix<T>>(log_softmax_rows(L));
  T loss = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (mask[i] != T(0)) loss -= (*logp)(static_cast<Eigen::Index>(i), targets[i]);
  }
  Matrix<T> out(1, 1);
  out(0, 0) = loss / count;
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<T> mk(mask.begin(), mask.end());
  return tape.push(std::move(out), {logits}, [logits, tg, mk, logp, count](Tape<T>& t, int self) {
    auto* gl = t.grad_buffer(logits);
    if (!gl) return;
    const T up = t.grad_of_self(self)(0, 0) / count;
    for (size_t i = 0; i < tg.size(); ++i) {
      if (mk[i] == T(0)) continue;
      const auto r = static_cast<Eigen::Index>(i);
      gl->row(r) += up * logp->row(r).array().exp().matrix();
      (*gl)(r, tg[i]) -= up;
    }
  });
}

template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double ratio, uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw InvalidArgument("dropout ratio must be in [0, 1)");
  Matrix<T> m(rows, cols);
  std::mt19937_64 rng(seed);
  const T keep = static_cast<T>(1.0 / (1.0 - ratio));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = uniform01(rng) < ratio ? T(0) : keep;
  }
  return m;
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double ratio, bool training, uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw InvalidArgument("dropout ratio must be in [0, 1)");
  if (!training || ratio == 0.0) return x;
  const auto& X = tape.value(x);
  return mul_const(tape, x, dropout_mask<T>(X.rows(), X.cols(), ratio, seed));
}

#define S2T_INSTANTIATE_OPS(T)                                                                  \
  template Var matmul<T>(Tape<T>&, Var, Var);                                                   \
  template Var affine<T>(Tape<T>&, Var, Var, Var);                                              \
  template Var add<T>(Tape<T>&, Var, Var);                                                      \
  template Var mul<T>(Tape<T>&, Var, Var);                                                      \
  template Var scale<T>(Tape<T>&, Var, T);                                                      \
  template Var mul_const<T>(Tape<T>&, Var, const Matrix<T>&);                                   \
  template Var sigmoid<T>(Tape<T>&, Var);                                                       \
  template Var tanh<T>(Tape<T>&, Var);                                                          \
  template Var relu<T>(Tape<T>&, Var);                                                          \
  template Var sum<T>(Tape<T>&, Var);                                                           \
  template Var concat_cols<T>(Tape<T>&, std::span<const Var>);                                  \
  template Var slice_cols<T>(Tape<T>&, Var, int, int);                                          \
  template Var concat_rows<T>(Tape<T>&, std::span<const Var>);                                  \
  template Var slice_rows<T>(Tape<T>&, Var, int, int);                                          \
  template Var gather_rows<T>(Tape<T>&, Var, std::span<const int>, int);                        \
  template Var lstm_cell<T>(Tape<T>&, Var, Var);                                                \
  template Var blend_rows<T>(Tape<T>&, std::span<const uint8_t>, Var, Var);                     \
  template ConvResult conv2d_relu<T>(Tape<T>&, Var, ConvGeometry, Var, Var, int, int,           \
                                     const std::vector<int>*);                                  \
  template Var to_time_major<T>(Tape<T>&, Var, ConvGeometry);                                   \
  template Var attention_scores<T>(Tape<T>&, Var, Var, int);                                    \
  template Var masked_softmax<T>(Tape<T>&, Var, std::span<const int>);                          \
  template Var attention_context<T>(Tape<T>&, Var, Var, int);                                   \
  template Var softmax_xent<T>(Tape<T>&, Var, std::span<const int>, std::span<const T>);        \
  template Matrix<T> dropout_mask<T>(Eigen::Index, Eigen::Index, double, uint64_t);             \
  template Var dropout<T>(Tape<T>&, Var, double, bool, uint64_t);                               \
  template Matrix<T> log_softmax_rows<T>(const Matrix<T>&);

S2T_INSTANTIATE_OPS(float)
S2T_INSTANTIATE_OPS(double)

}  // namespace s2t::nn
