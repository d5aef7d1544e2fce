#include "textcnnlab/embedding.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "textcnnlab/tensor.hpp"
#include "textcnnlab/util.hpp"

namespace textcnn {

void SkipGramConfig::validate() const {
  if (window < 1) throw std::invalid_argument("skipgram: window must be >= 1");
  if (negatives < 1) throw std::invalid_argument("skipgram: negatives must be >= 1");
  if (epochs < 1) throw std::invalid_argument("skipgram: epochs must be >= 1");
  if (!(lr > 0)) throw std::invalid_argument("skipgram: lr must be > 0");
  if (min_count < 1) throw std::invalid_argument("skipgram: min_count must be >= 1");
  if (workers < 1) throw std::invalid_argument("skipgram: workers must be >= 1");
}

namespace {

constexpr int kUnigramTableSize = 1 << 20;

// unigram distribution raised to the 0.75 power
std::vector<int> build_negative_table(const Vocabulary& vocab) {
  const int V = vocab.size();
  std::vector<double> weights(static_cast<size_t>(V));
  double total = 0.0;
  for (int i = 0; i < V; ++i) {
    weights[static_cast<size_t>(i)] =
        std::pow(static_cast<double>(vocab.counts()[static_cast<size_t>(i)]), 0.75);
    total += weights[static_cast<size_t>(i)];
  }
  std::vector<int> table(kUnigramTableSize);
  size_t pos = 0;
  double cum = 0.0;
  for (int i = 0; i < V; ++i) {
    cum += weights[static_cast<size_t>(i)] / total;
    const size_t end = std::min(static_cast<size_t>(kUnigramTableSize),
                                static_cast<size_t>(cum * kUnigramTableSize) + 1);
    for (; pos < end; ++pos) table[pos] = i + 1;
  }
  for (; pos < static_cast<size_t>(kUnigramTableSize); ++pos) table[pos] = V;
  return table;
}

double sigmoid_d(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct TrainSlice {
  size_t begin_sentence;
  size_t end_sentence;
};

}  // namespace

EmbeddingMatrix train_skipgram(const std::vector<std::vector<std::string>>& token_lists,
                               const Vocabulary& vocab, const SkipGramConfig& cfg,
                               SkipGramStats* stats) {
  cfg.validate();
  const int V = vocab.size();
  const int dim = kEmbeddingDim;

  std::vector<std::vector<int>> sentences;
  sentences.reserve(token_lists.size());
  int64_t total_tokens = 0;
  for (const auto& list : token_lists) {
    std::vector<int> ids;
    ids.reserve(list.size());
    for (const auto& tok : list) {
      const int id = vocab.id_of(tok);
      if (id != 0) ids.push_back(id);
    }
    total_tokens += static_cast<int64_t>(ids.size());
    if (ids.size() >= 2) sentences.push_back(std::move(ids));
  }
  if (sentences.empty()) throw std::runtime_error("skipgram: empty corpus");

  EmbeddingMatrix emb(V, dim, vocab.hash());
  std::vector<float> out_vecs(static_cast<size_t>(V + 1) * dim, 0.0f);
  {
    Rng init_rng(cfg.seed);
    for (int id = 1; id <= V; ++id) {
      float* r = emb.row(id);
      for (int d = 0; d < dim; ++d)
        r[d] = static_cast<float>((init_rng.uniform() - 0.5) / dim);
    }
  }

  const std::vector<int> neg_table = build_negative_table(vocab);
  const int64_t planned_tokens = static_cast<int64_t>(cfg.epochs) * total_tokens;
  std::atomic<int64_t> tokens_done{0};

  if (stats) {
    stats->epoch_loss.assign(static_cast<size_t>(cfg.epochs), 0.0);
    stats->pairs_trained = 0;
  }

  const int n_workers = std::min<int>(cfg.workers, static_cast<int>(sentences.size()));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> loss_acc(static_cast<size_t>(n_workers), 0.0);
    std::vector<int64_t> pair_acc(static_cast<size_t>(n_workers), 0);

    auto run_slice = [&](int worker, TrainSlice slice) {
      Rng rng(cfg.seed + 0x1000u * static_cast<uint64_t>(epoch) +
              static_cast<uint64_t>(worker) * 0x51ED2700u + 7u);
      std::vector<double> grad_center(static_cast<size_t>(dim));
      for (size_t si = slice.begin_sentence; si < slice.end_sentence; ++si) {
        const auto& sent = sentences[si];
        const int n = static_cast<int>(sent.size());
        for (int i = 0; i < n; ++i) {
          // classic dynamic window: sample b in [1, window]
          const int b = 1 + static_cast<int>(rng.index(static_cast<size_t>(cfg.window)));
          const double progress =
              static_cast<double>(tokens_done.load(std::memory_order_relaxed)) /
              static_cast<double>(std::max<int64_t>(1, planned_tokens));
          const double lr =
              std::max(cfg.lr_min, cfg.lr * (1.0 - progress));
          for (int j = std::max(0, i - b); j <= std::min(n - 1, i + b); ++j) {
            if (j == i) continue;
            const int center = sent[static_cast<size_t>(i)];
            const int context = sent[static_cast<size_t>(j)];
            float* v_in = emb.row(center);
            std::fill(grad_center.begin(), grad_center.end(), 0.0);
            double pair_loss = 0.0;
            for (int k = 0; k <= cfg.negatives; ++k) {
              int target;
              double label;
              if (k == 0) {
                target = context;
                label = 1.0;
              } else {
                target = neg_table[rng.index(kUnigramTableSize)];
                if (target == context) continue;
                label = 0.0;
              }
              float* v_out = out_vecs.data() + static_cast<size_t>(target) * dim;
              double dot = 0.0;
              for (int d = 0; d < dim; ++d) dot += static_cast<double>(v_in[d]) * v_out[d];
              const double p = sigmoid_d(dot);
              pair_loss += label > 0.5 ? -std::log(std::max(p, 1e-10))
                                       : -std::log(std::max(1.0 - p, 1e-10));
              const double g = (p - label) * lr;
              for (int d = 0; d < dim; ++d) {
                grad_center[static_cast<size_t>(d)] += g * v_out[d];
                v_out[d] -= static_cast<float>(g * v_in[d]);
              }
            }
            for (int d = 0; d < dim; ++d)
              v_in[d] -= static_cast<float>(grad_center[static_cast<size_t>(d)]);
            loss_acc[static_cast<size_t>(worker)] += pair_loss;
            ++pair_acc[static_cast<size_t>(worker)];
          }
          tokens_done.fetch_add(1, std::memory_order_relaxed);
        }
      }
    };

    if (n_workers == 1) {
      run_slice(0, {0, sentences.size()});
    } else {
      std::vector<std::thread> threads;
      const size_t per = (sentences.size() + n_workers - 1) / n_workers;
      for (int w = 0; w < n_workers; ++w) {
        const size_t b = std::min(sentences.size(), static_cast<size_t>(w) * per);
        const size_t e = std::min(sentences.size(), b + per);
        threads.emplace_back(run_slice, w, TrainSlice{b, e});
      }
      for (auto& t : threads) t.join();
    }

    if (stats) {
      double loss = 0.0;
      int64_t pairs = 0;
      for (int w = 0; w < n_workers; ++w) {
        loss += loss_acc[static_cast<size_t>(w)];
        pairs += pair_acc[static_cast<size_t>(w)];
      }
      stats->epoch_loss[static_cast<size_t>(epoch)] =
          pairs > 0 ? loss / static_cast<double>(pairs) : 0.0;
      stats->pairs_trained += pairs;
    }
  }

  check_finite(emb.rows.data(), emb.rows.size(), "train_skipgram");
  return emb;
}

void save_word_vectors(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                       const std::string& path) {
  if (emb.vocab_size != vocab.size())
    throw std::invalid_argument("save_word_vectors: embedding/vocabulary size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vectors: " + path);
  out << vocab.size() << " " << emb.dim << "\n";
  for (int id = 1; id <= vocab.size(); ++id) {
    out << vocab.word_of(id);
    const float* r = emb.row(id);
    for (int d = 0; d < emb.dim; ++d) out << " " << format_sig9(r[d]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

EmbeddingMatrix load_word_vectors(const std::string& path, const Vocabulary& vocab,
                                  uint64_t seed, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vectors: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty vector file: " + path);
  std::istringstream header(line);
  int64_t n_words;
  int dim;
  if (!(header >> n_words >> dim))
    throw std::runtime_error("malformed vector header (line 1) in " + path);
  if (dim != kEmbeddingDim)
    throw std::runtime_error("vector dimension " + std::to_string(dim) + " != " +
                             std::to_string(kEmbeddingDim) + " in " + path);

  EmbeddingMatrix emb(vocab.size(), dim, vocab.hash());
  std::vector<bool> filled(static_cast<size_t>(vocab.size()) + 1, false);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word))
      throw std::runtime_error("malformed vector line " + std::to_string(line_no));
    std::vector<float> vals;
    vals.reserve(static_cast<size_t>(dim));
    double v;
    while (ss >> v) vals.push_back(static_cast<float>(v));
    if (static_cast<int>(vals.size()) != dim)
      throw std::runtime_error("malformed vector line " + std::to_string(line_no) + " in " +
                               path + " (got " + std::to_string(vals.size()) + " values)");
    const int id = vocab.id_of(word);
    if (id == 0) continue;  // words outside the vocabulary are ignored
    std::copy(vals.begin(), vals.end(), emb.row(id));
    filled[static_cast<size_t>(id)] = true;
  }

  Rng rng(seed);
  std::vector<std::string> missing;
  for (int id = 1; id <= vocab.size(); ++id) {
    if (filled[static_cast<size_t>(id)]) continue;
    missing.push_back(vocab.word_of(id));
    float* r = emb.row(id);
    for (int d = 0; d < dim; ++d)
      r[d] = static_cast<float>(rng.uniform(-0.05, 0.05));
  }
  if (!missing.empty() && warnings) {
    std::string msg = std::to_string(missing.size()) + " vocabulary words missing from " +
                      path + ":";
    for (const auto& w : missing) msg += " " + w;
    warnings->push_back(std::move(msg));
  }
  return emb;
}

double cosine_similarity(const EmbeddingMatrix& emb, int id_a, int id_b) {
  const float* a = emb.row(id_a);
  const float* b = emb.row(id_b);
  double dot = 0, na = 0, nb = 0;
  for (int d = 0; d < emb.dim; ++d) {
    dot += static_cast<double>(a[d]) * b[d];
    na += static_cast<double>(a[d]) * a[d];
    nb += static_cast<double>(b[d]) * b[d];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace textcnn
