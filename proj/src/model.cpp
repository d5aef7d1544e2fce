#include "textcnnlab/model.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "textcnnlab/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textcnn {

CnnDims CnnDims::tiny() {
  // The reference widths (5/5 with two pools of 2) need seq_len >= 16; for the
  // L=12 gradient-check configuration the widths scale down to 3.
  CnnDims d;
  d.seq_len = 12;
  d.emb_dim = 6;
  d.conv1_filters = 4;
  d.conv1_width = 3;
  d.conv2_filters = 3;
  d.conv2_width = 3;
  d.dense_units = 5;
  return d;
}

namespace {

template <typename T>
void glorot_fill(Tensor<T>& t, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace

EmbeddingMatrix random_embedding(const Vocabulary& vocab, uint64_t seed) {
  EmbeddingMatrix emb(vocab.size(), kEmbeddingDim, vocab.hash());
  Rng rng(seed ^ 0xe5b0c3d2f1a49687ull);
  for (int id = 1; id <= vocab.size(); ++id) {
    float* r = emb.row(id);
    for (int d = 0; d < emb.dim; ++d) r[d] = static_cast<float>(rng.uniform(-0.05, 0.05));
  }
  return emb;
}

SentimentCNN build_model(int vocab_size, const EmbeddingMatrix& emb, bool emb_trainable,
                         uint64_t seed, const CnnDims& dims) {
  if (emb.row_count() != vocab_size + 1)
    throw std::invalid_argument("build_model: embedding rows != vocab_size + 1");
  if (emb.dim != dims.emb_dim)
    throw std::invalid_argument("build_model: embedding dim mismatch");

  SentimentCNN m;
  m.dims = dims;
  m.vocab_size = vocab_size;
  m.vocab_hash = emb.vocab_hash;
  m.seed = seed;
  m.emb_trainable = emb_trainable;
  m.embedding = Tensor<float>({vocab_size + 1, dims.emb_dim}, emb.rows);

  Rng rng(seed);
  m.conv1 = nn::Conv1dParams<float>(dims.conv1_filters, dims.conv1_width, dims.emb_dim);
  glorot_fill(m.conv1.weights, dims.conv1_width * dims.emb_dim,
              dims.conv1_width * dims.conv1_filters, rng);
  m.conv2 = nn::Conv1dParams<float>(dims.conv2_filters, dims.conv2_width, dims.conv1_filters);
  glorot_fill(m.conv2.weights, dims.conv2_width * dims.conv1_filters,
              dims.conv2_width * dims.conv2_filters, rng);
  m.dense = nn::DenseParams<float>(dims.flatten_size(), dims.dense_units);
  glorot_fill(m.dense.weights, m.dense.in, m.dense.out, rng);
  m.out = nn::DenseParams<float>(dims.dense_units, 1);
  glorot_fill(m.out.weights, m.out.in, m.out.out, rng);
  return m;
}

template <typename T>
ParamCount count_params(const CnnModel<T>& model) {
  ParamCount pc;
  const int64_t emb_n = model.embedding.numel();
  pc.per_layer["embedding"] = emb_n;
  pc.per_layer["conv1"] = model.conv1.param_count();
  pc.per_layer["conv2"] = model.conv2.param_count();
  pc.per_layer["dense"] = model.dense.param_count();
  pc.per_layer["out"] = model.out.param_count();
  for (const auto& [_, n] : pc.per_layer) pc.total += n;
  pc.trainable = (model.emb_trainable ? emb_n : 0) +
                 (model.conv1_trainable ? model.conv1.param_count() : 0) +
                 model.conv2.param_count() + model.dense.param_count() +
                 model.out.param_count();
  pc.frozen = pc.total - pc.trainable;
  return pc;
}

template ParamCount count_params<float>(const CnnModel<float>&);
template ParamCount count_params<double>(const CnnModel<double>&);

template <typename T>
T forward_item(const CnnModel<T>& model, const std::vector<int>& ids, ForwardTrace<T>& trace) {
  const auto& d = model.dims;
  if (static_cast<int>(ids.size()) != d.seq_len)
    throw std::invalid_argument("forward: sequence length mismatch");

  trace.x_emb = Tensor<T>({d.seq_len, d.emb_dim});
  for (int t = 0; t < d.seq_len; ++t) {
    const int id = ids[static_cast<size_t>(t)];
    if (id < 0 || id > model.vocab_size)
      throw std::out_of_range("forward: token id " + std::to_string(id) + " out of range");
    const T* src = model.embedding.row(id);
    std::copy(src, src + d.emb_dim, trace.x_emb.row(t));
  }

  trace.conv1_pre = nn::conv1d_forward(trace.x_emb, model.conv1);
  Tensor<T> act1 = trace.conv1_pre;
  nn::relu_inplace(act1);
  auto pool1 = nn::maxpool1d(act1, d.pool_size, d.pool_stride);
  trace.pool1_out = std::move(pool1.y);
  trace.pool1_argmax = std::move(pool1.argmax);

  trace.conv2_pre = nn::conv1d_forward(trace.pool1_out, model.conv2);
  Tensor<T> act2 = trace.conv2_pre;
  nn::relu_inplace(act2);
  auto pool2 = nn::maxpool1d(act2, d.pool_size, d.pool_stride);
  trace.pool2_out = std::move(pool2.y);
  trace.pool2_argmax = std::move(pool2.argmax);

  Tensor<T> flat({d.flatten_size()}, trace.pool2_out.data);
  trace.dense_pre = nn::dense_forward(flat, model.dense);
  trace.dense_act = trace.dense_pre;
  nn::relu_inplace(trace.dense_act);

  Tensor<T> logits = nn::dense_forward(trace.dense_act, model.out);
  trace.logit = logits.data[0];
  trace.prob = nn::sigmoid(trace.logit);
  return trace.prob;
}

template float forward_item<float>(const CnnModel<float>&, const std::vector<int>&,
                                   ForwardTrace<float>&);
template double forward_item<double>(const CnnModel<double>&, const std::vector<int>&,
                                     ForwardTrace<double>&);

template <typename T>
ModelGrads<T> make_grads(const CnnModel<T>& model) {
  ModelGrads<T> g;
  if (model.emb_trainable)
    g.embedding = Tensor<T>({model.vocab_size + 1, model.dims.emb_dim});
  g.conv1_w = Tensor<T>(model.conv1.weights.shape);
  g.conv1_b = Tensor<T>(model.conv1.bias.shape);
  g.conv2_w = Tensor<T>(model.conv2.weights.shape);
  g.conv2_b = Tensor<T>(model.conv2.bias.shape);
  g.dense_w = Tensor<T>(model.dense.weights.shape);
  g.dense_b = Tensor<T>(model.dense.bias.shape);
  g.out_w = Tensor<T>(model.out.weights.shape);
  g.out_b = Tensor<T>(model.out.bias.shape);
  return g;
}

template ModelGrads<float> make_grads<float>(const CnnModel<float>&);
template ModelGrads<double> make_grads<double>(const CnnModel<double>&);

template <typename T>
void zero_grads(ModelGrads<T>& grads) {
  auto zero = [](Tensor<T>& t) { std::fill(t.data.begin(), t.data.end(), T(0)); };
  zero(grads.embedding);
  zero(grads.conv1_w);
  zero(grads.conv1_b);
  zero(grads.conv2_w);
  zero(grads.conv2_b);
  zero(grads.dense_w);
  zero(grads.dense_b);
  zero(grads.out_w);
  zero(grads.out_b);
}

template void zero_grads<float>(ModelGrads<float>&);
template void zero_grads<double>(ModelGrads<double>&);

template <typename T>
void accumulate_grads(ModelGrads<T>& into, const ModelGrads<T>& from) {
  auto add = [](Tensor<T>& a, const Tensor<T>& b) {
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  };
  add(into.embedding, from.embedding);
  add(into.conv1_w, from.conv1_w);
  add(into.conv1_b, from.conv1_b);
  add(into.conv2_w, from.conv2_w);
  add(into.conv2_b, from.conv2_b);
  add(into.dense_w, from.dense_w);
  add(into.dense_b, from.dense_b);
  add(into.out_w, from.out_w);
  add(into.out_b, from.out_b);
}

template void accumulate_grads<float>(ModelGrads<float>&, const ModelGrads<float>&);
template void accumulate_grads<double>(ModelGrads<double>&, const ModelGrads<double>&);

template <typename T>
T backward_item(const CnnModel<T>& model, const std::vector<int>& ids, int label,
                const ForwardTrace<T>& trace, ModelGrads<T>& grads) {
  const auto& d = model.dims;
  const auto [loss, _] = nn::bce_loss(trace.prob, label);
  // exact gradient of bce(sigmoid(z)) wrt z
  const T dz = trace.prob - static_cast<T>(label);

  Tensor<T> g_out({1});
  g_out.data[0] = dz;
  auto gout = nn::dense_backward(trace.dense_act, model.out, g_out);
  for (size_t i = 0; i < gout.weights.data.size(); ++i)
    grads.out_w.data[i] += gout.weights.data[i];
  grads.out_b.data[0] += gout.bias.data[0];

  nn::relu_backward_inplace(trace.dense_pre, gout.x);
  Tensor<T> flat({d.flatten_size()}, trace.pool2_out.data);
  auto gdense = nn::dense_backward(flat, model.dense, gout.x);
  for (size_t i = 0; i < gdense.weights.data.size(); ++i)
    grads.dense_w.data[i] += gdense.weights.data[i];
  for (size_t i = 0; i < gdense.bias.data.size(); ++i)
    grads.dense_b.data[i] += gdense.bias.data[i];

  Tensor<T> g_pool2({d.pool2_out(), d.conv2_filters}, gdense.x.data);
  Tensor<T> g_act2 =
      nn::maxpool1d_backward(g_pool2, trace.pool2_argmax, d.conv2_out(), d.conv2_filters);
  nn::relu_backward_inplace(trace.conv2_pre, g_act2);

  const bool need_conv1_grads = model.conv1_trainable || model.emb_trainable;
  auto gconv2 = nn::conv1d_backward(trace.pool1_out, model.conv2, g_act2, need_conv1_grads);
  for (size_t i = 0; i < gconv2.weights.data.size(); ++i)
    grads.conv2_w.data[i] += gconv2.weights.data[i];
  for (size_t i = 0; i < gconv2.bias.data.size(); ++i)
    grads.conv2_b.data[i] += gconv2.bias.data[i];

  if (need_conv1_grads) {
    Tensor<T> g_act1 =
        nn::maxpool1d_backward(gconv2.x, trace.pool1_argmax, d.conv1_out(), d.conv1_filters);
    nn::relu_backward_inplace(trace.conv1_pre, g_act1);
    auto gconv1 = nn::conv1d_backward(trace.x_emb, model.conv1, g_act1, model.emb_trainable);
    if (model.conv1_trainable) {
      for (size_t i = 0; i < gconv1.weights.data.size(); ++i)
        grads.conv1_w.data[i] += gconv1.weights.data[i];
      for (size_t i = 0; i < gconv1.bias.data.size(); ++i)
        grads.conv1_b.data[i] += gconv1.bias.data[i];
    }
    if (model.emb_trainable) {
      // dense scatter; row 0 collects pad gradient but is never bound to the
      // optimizer, so it cannot move
      for (int t = 0; t < d.seq_len; ++t) {
        const int id = ids[static_cast<size_t>(t)];
        T* dst = grads.embedding.row(id);
        const T* src = gconv1.x.row(t);
        for (int c = 0; c < d.emb_dim; ++c) dst[c] += src[c];
      }
    }
  }
  return loss;
}

template float backward_item<float>(const CnnModel<float>&, const std::vector<int>&, int,
                                    const ForwardTrace<float>&, ModelGrads<float>&);
template double backward_item<double>(const CnnModel<double>&, const std::vector<int>&, int,
                                      const ForwardTrace<double>&, ModelGrads<double>&);

std::vector<float> forward(const SentimentCNN& model, const std::vector<EncodedReview>& batch,
                           int workers) {
  std::vector<float> probs(batch.size());
  const int n_workers =
      std::max(1, std::min<int>(workers, static_cast<int>(batch.size())));
  auto run = [&](size_t begin, size_t end) {
    ForwardTrace<float> trace;
    for (size_t i = begin; i < end; ++i)
      probs[i] = forward_item(model, batch[i].ids, trace);
  };
  if (n_workers == 1) {
    run(0, batch.size());
  } else {
    std::vector<std::thread> threads;
    const size_t per = (batch.size() + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const size_t b = std::min(batch.size(), static_cast<size_t>(w) * per);
      const size_t e = std::min(batch.size(), b + per);
      if (b < e) threads.emplace_back(run, b, e);
    }
    for (auto& t : threads) t.join();
  }
  return probs;
}

CnnModel<double> to_double(const SentimentCNN& model) {
  CnnModel<double> m;
  m.dims = model.dims;
  m.vocab_size = model.vocab_size;
  m.vocab_hash = model.vocab_hash;
  m.seed = model.seed;
  m.emb_trainable = model.emb_trainable;
  m.conv1_trainable = model.conv1_trainable;
  auto conv = [](const nn::Conv1dParams<float>& p) {
    nn::Conv1dParams<double> q(p.filters, p.width, p.in_channels, p.stride);
    std::copy(p.weights.data.begin(), p.weights.data.end(), q.weights.data.begin());
    std::copy(p.bias.data.begin(), p.bias.data.end(), q.bias.data.begin());
    return q;
  };
  auto dense = [](const nn::DenseParams<float>& p) {
    nn::DenseParams<double> q(p.in, p.out);
    std::copy(p.weights.data.begin(), p.weights.data.end(), q.weights.data.begin());
    std::copy(p.bias.data.begin(), p.bias.data.end(), q.bias.data.begin());
    return q;
  };
  m.embedding = Tensor<double>(model.embedding.shape);
  std::copy(model.embedding.data.begin(), model.embedding.data.end(), m.embedding.data.begin());
  m.conv1 = conv(model.conv1);
  m.conv2 = conv(model.conv2);
  m.dense = dense(model.dense);
  m.out = dense(model.out);
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoints: manifest.json + weights.bin (little-endian float32, fixed order)
// ---------------------------------------------------------------------------

namespace {

struct LayerRef {
  std::string name;
  const Tensor<float>* tensor;
};

std::vector<LayerRef> layer_order(const SentimentCNN& m) {
  return {{"embedding", &m.embedding}, {"conv1.w", &m.conv1.weights},
          {"conv1.b", &m.conv1.bias},  {"conv2.w", &m.conv2.weights},
          {"conv2.b", &m.conv2.bias},  {"dense.w", &m.dense.weights},
          {"dense.b", &m.dense.bias},  {"out.w", &m.out.weights},
          {"out.b", &m.out.bias}};
}

json dims_to_json(const CnnDims& d) {
  return json{{"seq_len", d.seq_len},
              {"emb_dim", d.emb_dim},
              {"conv1_filters", d.conv1_filters},
              {"conv1_width", d.conv1_width},
              {"conv2_filters", d.conv2_filters},
              {"conv2_width", d.conv2_width},
              {"pool_size", d.pool_size},
              {"pool_stride", d.pool_stride},
              {"dense_units", d.dense_units}};
}

CnnDims dims_from_json(const json& j) {
  CnnDims d;
  d.seq_len = j.at("seq_len");
  d.emb_dim = j.at("emb_dim");
  d.conv1_filters = j.at("conv1_filters");
  d.conv1_width = j.at("conv1_width");
  d.conv2_filters = j.at("conv2_filters");
  d.conv2_width = j.at("conv2_width");
  d.pool_size = j.at("pool_size");
  d.pool_stride = j.at("pool_stride");
  d.dense_units = j.at("dense_units");
  return d;
}

}  // namespace

void save_checkpoint(const SentimentCNN& model, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "textcnn-lab-checkpoint-v1";
  manifest["precision"] = "float32";
  manifest["byte_order"] = "little-endian";
  manifest["vocab_size"] = model.vocab_size;
  manifest["vocab_hash"] = model.vocab_hash;
  manifest["seed"] = model.seed;
  manifest["emb_trainable"] = model.emb_trainable;
  manifest["conv1_trainable"] = model.conv1_trainable;
  manifest["dims"] = dims_to_json(model.dims);
  json layers = json::array();
  for (const auto& l : layer_order(model))
    layers.push_back(json{{"name", l.name}, {"shape", l.tensor->shape}});
  manifest["layers"] = layers;
  manifest["weights_file"] = "weights.bin";

  std::ofstream mout(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!mout) throw std::runtime_error("cannot write manifest in " + dir);
  mout << manifest.dump(2) << "\n";

  std::ofstream wout(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!wout) throw std::runtime_error("cannot write weights in " + dir);
  for (const auto& l : layer_order(model)) {
    wout.write(reinterpret_cast<const char*>(l.tensor->data.data()),
               static_cast<std::streamsize>(l.tensor->data.size() * sizeof(float)));
  }
  if (!wout) throw std::runtime_error("weights write failed in " + dir);
}

SentimentCNN load_checkpoint(const std::string& dir, const std::string& expected_vocab_hash) {
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) throw std::runtime_error("cannot open manifest in " + dir);
  json manifest = json::parse(min);
  if (manifest.at("format") != "textcnn-lab-checkpoint-v1")
    throw std::runtime_error("unknown checkpoint format in " + dir);

  SentimentCNN m;
  m.dims = dims_from_json(manifest.at("dims"));
  m.vocab_size = manifest.at("vocab_size");
  m.vocab_hash = manifest.at("vocab_hash");
  m.seed = manifest.at("seed");
  m.emb_trainable = manifest.at("emb_trainable");
  m.conv1_trainable = manifest.at("conv1_trainable");
  if (!expected_vocab_hash.empty() && m.vocab_hash != expected_vocab_hash)
    throw std::runtime_error("checkpoint vocab_hash " + m.vocab_hash +
                             " does not match supplied vocabulary " + expected_vocab_hash);

  m.embedding = Tensor<float>({m.vocab_size + 1, m.dims.emb_dim});
  m.conv1 = nn::Conv1dParams<float>(m.dims.conv1_filters, m.dims.conv1_width, m.dims.emb_dim);
  m.conv2 =
      nn::Conv1dParams<float>(m.dims.conv2_filters, m.dims.conv2_width, m.dims.conv1_filters);
  m.dense = nn::DenseParams<float>(m.dims.flatten_size(), m.dims.dense_units);
  m.out = nn::DenseParams<float>(m.dims.dense_units, 1);

  std::vector<std::pair<std::string, Tensor<float>*>> order = {
      {"embedding", &m.embedding}, {"conv1.w", &m.conv1.weights},
      {"conv1.b", &m.conv1.bias},  {"conv2.w", &m.conv2.weights},
      {"conv2.b", &m.conv2.bias},  {"dense.w", &m.dense.weights},
      {"dense.b", &m.dense.bias},  {"out.w", &m.out.weights},
      {"out.b", &m.out.bias}};

  const json& layers = manifest.at("layers");
  if (layers.size() != order.size())
    throw std::runtime_error("unexpected layer count in manifest: " + dir);
  for (size_t i = 0; i < order.size(); ++i) {
    if (layers[i].at("name") != order[i].first)
      throw std::runtime_error("unexpected layer order in manifest: " + dir);
    const auto shape = layers[i].at("shape").get<std::vector<int>>();
    if (shape != order[i].second->shape)
      throw std::runtime_error("layer shape mismatch for " + order[i].first + " in " + dir);
  }

  std::ifstream win(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!win) throw std::runtime_error("cannot open weights in " + dir);
  int64_t offset = 0;
  for (auto& [name, tensor] : order) {
    win.read(reinterpret_cast<char*>(tensor->data.data()),
             static_cast<std::streamsize>(tensor->data.size() * sizeof(float)));
    if (win.gcount() != static_cast<std::streamsize>(tensor->data.size() * sizeof(float)))
      throw std::runtime_error("truncated weights.bin at byte offset " +
                               std::to_string(offset + win.gcount()) + " while reading " + name);
    offset += static_cast<int64_t>(tensor->data.size() * sizeof(float));
  }
  char extra;
  if (win.read(&extra, 1))
    throw std::runtime_error("weights.bin longer than manifest describes in " + dir);
  return m;
}

}  // namespace textcnn
