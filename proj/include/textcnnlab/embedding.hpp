#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textcnnlab/corpus.hpp"

namespace textcnn {

// (V+1) x I matrix of word vectors; row 0 is the shared pad/unknown row and
// stays all-zero at creation.
struct EmbeddingMatrix {
  int vocab_size = 0;  // V
  int dim = kEmbeddingDim;
  std::vector<float> rows;  // (V+1) * dim, row-major
  std::string vocab_hash;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(int vocab_size_, int dim_, std::string hash)
      : vocab_size(vocab_size_), dim(dim_),
        rows(static_cast<size_t>(vocab_size_ + 1) * dim_, 0.0f),
        vocab_hash(std::move(hash)) {}

  float* row(int id) { return rows.data() + static_cast<size_t>(id) * dim; }
  const float* row(int id) const { return rows.data() + static_cast<size_t>(id) * dim; }
  int row_count() const { return vocab_size + 1; }
};

struct SkipGramConfig {
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr = 0.025;       // linearly decayed to lr_min over training
  double lr_min = 1e-4;
  int64_t min_count = 1;   // vocabulary is already frequency-filtered upstream
  uint64_t seed = 1;
  int workers = 1;         // >1 runs lock-free and is nondeterministic

  void validate() const;
};

struct SkipGramStats {
  std::vector<double> epoch_loss;  // mean negative-sampling objective per epoch
  int64_t pairs_trained = 0;
};

// Trains skip-gram with negative sampling over the corpus; tokens outside the
// vocabulary are skipped. Deterministic for a fixed seed when workers == 1.
EmbeddingMatrix train_skipgram(const std::vector<std::vector<std::string>>& token_lists,
                               const Vocabulary& vocab, const SkipGramConfig& cfg,
                               SkipGramStats* stats = nullptr);

// Text vector format: first line "V I", then one line per word:
// "word v1 v2 ... vI". Row 0 is never serialized.
void save_word_vectors(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                       const std::string& path);

// Vocabulary words missing from the file receive small seeded uniform
// vectors; a warning naming them is appended to `warnings` when given.
EmbeddingMatrix load_word_vectors(const std::string& path, const Vocabulary& vocab,
                                  uint64_t seed = 1,
                                  std::vector<std::string>* warnings = nullptr);

double cosine_similarity(const EmbeddingMatrix& emb, int id_a, int id_b);

}  // namespace textcnn
