#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "textcnnlab/embedding.hpp"
#include "textcnnlab/nn.hpp"

namespace textcnn {

// Architecture hyperparameters. Defaults reproduce the reference stack:
// 250 -> conv(32x5) 246 -> pool 123 -> conv(16x5) 119 -> pool 59 -> 944 -> 128 -> 1.
struct CnnDims {
  int seq_len = kSequenceLength;
  int emb_dim = kEmbeddingDim;
  int conv1_filters = 32;
  int conv1_width = 5;
  int conv2_filters = 16;
  int conv2_width = 5;
  int pool_size = 2;
  int pool_stride = 2;
  int dense_units = 128;

  int conv1_out() const { return nn::conv1d_out_len(seq_len, conv1_width, 1); }
  int pool1_out() const { return (conv1_out() - pool_size) / pool_stride + 1; }
  int conv2_out() const { return nn::conv1d_out_len(pool1_out(), conv2_width, 1); }
  int pool2_out() const { return (conv2_out() - pool_size) / pool_stride + 1; }
  int flatten_size() const { return pool2_out() * conv2_filters; }

  static CnnDims tiny();  // scaled-down stack used by the double-precision gradient checks
};

struct ParamCount {
  int64_t total = 0;
  int64_t trainable = 0;
  int64_t frozen = 0;
  std::map<std::string, int64_t> per_layer;
};

template <typename T>
struct CnnModel {
  CnnDims dims;
  int vocab_size = 0;
  std::string vocab_hash;
  uint64_t seed = 0;

  Tensor<T> embedding;  // [V+1, emb_dim]; row 0 is pad/unknown and never trains
  bool emb_trainable = false;
  nn::Conv1dParams<T> conv1;
  bool conv1_trainable = true;
  nn::Conv1dParams<T> conv2;
  nn::DenseParams<T> dense;
  nn::DenseParams<T> out;
};

using SentimentCNN = CnnModel<float>;

// Per-item intermediates, reusable across calls (one per worker thread).
template <typename T>
struct ForwardTrace {
  Tensor<T> x_emb;
  Tensor<T> conv1_pre, pool1_out;
  std::vector<int> pool1_argmax;
  Tensor<T> conv2_pre, pool2_out;
  std::vector<int> pool2_argmax;
  Tensor<T> dense_pre, dense_act;
  T logit = 0;
  T prob = 0;
};

// Gradients for one batch; embedding gradient is dense over all rows.
template <typename T>
struct ModelGrads {
  Tensor<T> embedding;  // [V+1, emb_dim], allocated only when emb trainable
  Tensor<T> conv1_w, conv1_b;
  Tensor<T> conv2_w, conv2_b;
  Tensor<T> dense_w, dense_b;
  Tensor<T> out_w, out_b;
};

// Fresh seeded Glorot-uniform weights for the convolution and dense layers;
// the embedding rows come from `emb` (its row 0 must be zero).
SentimentCNN build_model(int vocab_size, const EmbeddingMatrix& emb, bool emb_trainable,
                         uint64_t seed, const CnnDims& dims = CnnDims());

// Uniform(-0.05, 0.05) rows with row 0 zero, for the trainable-embedding runs.
EmbeddingMatrix random_embedding(const Vocabulary& vocab, uint64_t seed);

template <typename T>
ParamCount count_params(const CnnModel<T>& model);

template <typename T>
T forward_item(const CnnModel<T>& model, const std::vector<int>& ids, ForwardTrace<T>& trace);

// Returns the item loss; accumulates parameter gradients into `grads`
// (embedding rows are scattered densely when the embedding is trainable).
template <typename T>
T backward_item(const CnnModel<T>& model, const std::vector<int>& ids, int label,
                const ForwardTrace<T>& trace, ModelGrads<T>& grads);

std::vector<float> forward(const SentimentCNN& model, const std::vector<EncodedReview>& batch,
                           int workers = 1);

template <typename T>
ModelGrads<T> make_grads(const CnnModel<T>& model);

template <typename T>
void zero_grads(ModelGrads<T>& grads);

template <typename T>
void accumulate_grads(ModelGrads<T>& into, const ModelGrads<T>& from);

void save_checkpoint(const SentimentCNN& model, const std::string& dir);
SentimentCNN load_checkpoint(const std::string& dir, const std::string& expected_vocab_hash = "");

// double-precision copy used by the gradient checks
CnnModel<double> to_double(const SentimentCNN& model);

}  // namespace textcnn
