#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "textcnnlab/tensor.hpp"
#include "textcnnlab/util.hpp"

namespace textcnn::nn {

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

template <typename T>
struct Conv1dParams {
  int filters = 0;      // F
  int width = 0;        // S
  int in_channels = 0;  // C
  int stride = 1;
  Tensor<T> weights;  // [F, S, C]
  Tensor<T> bias;     // [F]

  Conv1dParams() = default;
  Conv1dParams(int f, int s, int c, int stride_ = 1)
      : filters(f), width(s), in_channels(c), stride(stride_),
        weights({f, s, c}), bias({f}) {
    if (stride_ < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  }

  const T* slice(int f, int s) const {
    return weights.ptr() + (static_cast<size_t>(f) * width + s) * in_channels;
  }
  T* slice(int f, int s) {
    return weights.ptr() + (static_cast<size_t>(f) * width + s) * in_channels;
  }
  int64_t param_count() const { return weights.numel() + bias.numel(); }
};

template <typename T>
struct DenseParams {
  int in = 0, out = 0;
  Tensor<T> weights;  // [in, out]
  Tensor<T> bias;     // [out]

  DenseParams() = default;
  DenseParams(int in_, int out_) : in(in_), out(out_), weights({in_, out_}), bias({out_}) {}
  int64_t param_count() const { return weights.numel() + bias.numel(); }
};

inline int conv1d_out_len(int L, int S, int stride) {
  return (L - S) / stride + 1;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

// x: [L, C], returns y: [L_out, F] with y[t,f] = b[f] + sum_{s,c} x[t*stride+s,c] * w[f,s,c]
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Conv1dParams<T>& p) {
  const int L = x.dim(0), C = x.dim(1);
  if (C != p.in_channels)
    throw std::invalid_argument("conv1d_forward: channel mismatch");
  if (L < p.width)
    throw std::invalid_argument("conv1d_forward: input length " + std::to_string(L) +
                                " shorter than filter width " + std::to_string(p.width));
  const int F = p.filters, S = p.width, stride = p.stride;
  const int Lout = conv1d_out_len(L, S, stride);
  Tensor<T> y({Lout, F});
  const T* __restrict__ xp = x.ptr();
  T* __restrict__ yp = y.ptr();
  for (int t = 0; t < Lout; ++t) {
    T* __restrict__ yrow = yp + static_cast<size_t>(t) * F;
    for (int f = 0; f < F; ++f) yrow[f] = p.bias.data[f];
    for (int s = 0; s < S; ++s) {
      const T* __restrict__ xrow = xp + static_cast<size_t>(t * stride + s) * C;
      for (int f = 0; f < F; ++f) {
        const T* __restrict__ w = p.slice(f, s);
        T acc = 0;
        for (int c = 0; c < C; ++c) acc += xrow[c] * w[c];
        yrow[f] += acc;
      }
    }
  }
  check_finite(y, "conv1d_forward");
  return y;
}

template <typename T>
struct Conv1dGrads {
  Tensor<T> x;        // [L, C], filled only when want_grad_x
  Tensor<T> weights;  // [F, S, C]
  Tensor<T> bias;     // [F]
};

template <typename T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Conv1dParams<T>& p,
                               const Tensor<T>& grad_out, bool want_grad_x = true) {
  const int L = x.dim(0), C = x.dim(1);
  const int F = p.filters, S = p.width, stride = p.stride;
  const int Lout = conv1d_out_len(L, S, stride);
  if (grad_out.dim(0) != Lout || grad_out.dim(1) != F)
    throw std::invalid_argument("conv1d_backward: grad_out shape mismatch");
  if (C != p.in_channels)
    throw std::invalid_argument("conv1d_backward: channel mismatch");

  Conv1dGrads<T> g;
  g.weights = Tensor<T>({F, S, C});
  g.bias = Tensor<T>({F});
  if (want_grad_x) g.x = Tensor<T>({L, C});

  const T* __restrict__ xp = x.ptr();
  const T* __restrict__ gop = grad_out.ptr();
  T* __restrict__ gw = g.weights.ptr();
  T* __restrict__ gb = g.bias.ptr();
  T* __restrict__ gx = want_grad_x ? g.x.ptr() : nullptr;

  for (int t = 0; t < Lout; ++t) {
    const T* __restrict__ grow = gop + static_cast<size_t>(t) * F;
    for (int f = 0; f < F; ++f) gb[f] += grow[f];
    for (int s = 0; s < S; ++s) {
      const T* __restrict__ xrow = xp + static_cast<size_t>(t * stride + s) * C;
      for (int f = 0; f < F; ++f) {
        const T go = grow[f];
        if (go == T(0)) continue;
        T* __restrict__ wg = gw + (static_cast<size_t>(f) * S + s) * C;
        for (int c = 0; c < C; ++c) wg[c] += go * xrow[c];
      }
      if (want_grad_x) {
        T* __restrict__ xg = gx + static_cast<size_t>(t * stride + s) * C;
        for (int f = 0; f < F; ++f) {
          const T go = grow[f];
          if (go == T(0)) continue;
          const T* __restrict__ w = p.slice(f, s);
          for (int c = 0; c < C; ++c) xg[c] += go * w[c];
        }
      }
    }
  }
  check_finite(g.weights, "conv1d_backward");
  return g;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolResult {
  Tensor<T> y;             // [L_out, C]
  std::vector<int> argmax;  // [L_out * C], input row index of the first maximum
};

template <typename T>
MaxPoolResult<T> maxpool1d(const Tensor<T>& x, int size, int stride) {
  const int L = x.dim(0), C = x.dim(1);
  if (L < size)
    throw std::invalid_argument("maxpool1d: input length " + std::to_string(L) +
                                " shorter than pool size " + std::to_string(size));
  const int Lout = (L - size) / stride + 1;
  MaxPoolResult<T> r{Tensor<T>({Lout, C}), std::vector<int>(static_cast<size_t>(Lout) * C)};
  for (int t = 0; t < Lout; ++t) {
    const int base = t * stride;
    for (int c = 0; c < C; ++c) {
      T best = x.at(base, c);
      int best_i = base;
      for (int k = 1; k < size; ++k) {
        const T v = x.at(base + k, c);
        if (v > best) {  // strict: ties keep the first maximal position
          best = v;
          best_i = base + k;
        }
      }
      r.y.at(t, c) = best;
      r.argmax[static_cast<size_t>(t) * C + c] = best_i;
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& grad_out, const std::vector<int>& argmax,
                             int L, int C) {
  Tensor<T> gx({L, C});
  const int Lout = grad_out.dim(0);
  for (int t = 0; t < Lout; ++t)
    for (int c = 0; c < C; ++c)
      gx.at(argmax[static_cast<size_t>(t) * C + c], c) += grad_out.at(t, c);
  return gx;
}

// ---------------------------------------------------------------------------
// Dense, activations, loss
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const DenseParams<T>& p) {
  if (x.numel() != p.in) throw std::invalid_argument("dense_forward: input size mismatch");
  Tensor<T> y({p.out});
  const T* __restrict__ xp = x.ptr();
  T* __restrict__ yp = y.ptr();
  for (int o = 0; o < p.out; ++o) yp[o] = p.bias.data[o];
  for (int i = 0; i < p.in; ++i) {
    const T xi = xp[i];
    if (xi == T(0)) continue;
    const T* __restrict__ w = p.weights.ptr() + static_cast<size_t>(i) * p.out;
    for (int o = 0; o < p.out; ++o) yp[o] += xi * w[o];
  }
  check_finite(y, "dense_forward");
  return y;
}

template <typename T>
struct DenseGrads {
  Tensor<T> x;        // [in]
  Tensor<T> weights;  // [in, out]
  Tensor<T> bias;     // [out]
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const DenseParams<T>& p,
                             const Tensor<T>& grad_out) {
  if (grad_out.numel() != p.out)
    throw std::invalid_argument("dense_backward: grad_out size mismatch");
  DenseGrads<T> g{Tensor<T>({p.in}), Tensor<T>({p.in, p.out}), Tensor<T>({p.out})};
  const T* __restrict__ go = grad_out.ptr();
  for (int o = 0; o < p.out; ++o) g.bias.data[o] = go[o];
  const T* __restrict__ xp = x.ptr();
  for (int i = 0; i < p.in; ++i) {
    const T* __restrict__ w = p.weights.ptr() + static_cast<size_t>(i) * p.out;
    T* __restrict__ wg = g.weights.ptr() + static_cast<size_t>(i) * p.out;
    const T xi = xp[i];
    T acc = 0;
    for (int o = 0; o < p.out; ++o) {
      wg[o] = xi * go[o];
      acc += w[o] * go[o];
    }
    g.x.data[i] = acc;
  }
  return g;
}

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

// grad wrt pre-activation; `pre` is the input that went into relu
template <typename T>
void relu_backward_inplace(const Tensor<T>& pre, Tensor<T>& grad) {
  for (size_t i = 0; i < grad.data.size(); ++i)
    if (pre.data[i] <= T(0)) grad.data[i] = T(0);
}

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) {
    const T e = std::exp(-z);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Binary cross-entropy for one item; predictions clamped to [1e-7, 1 - 1e-7].
// Returns {loss, dloss/dpred} evaluated at the clamped prediction.
template <typename T>
std::pair<T, T> bce_loss(T pred, int label) {
  const T lo = T(1e-7), hi = T(1) - T(1e-7);
  const T q = std::min(hi, std::max(lo, pred));
  if (!std::isfinite(static_cast<double>(q)))
    throw std::runtime_error("non-finite value produced by bce_loss");
  const T loss = label == 1 ? -std::log(q) : -std::log(T(1) - q);
  const T grad = label == 1 ? -T(1) / q : T(1) / (T(1) - q);
  return {loss, grad};
}

}  // namespace textcnn::nn
