#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textcnnlab/embedding.hpp"
#include "textcnnlab/nn.hpp"

namespace textcnn {

// Per-word activation-sum importance. Scores are indexed by word id (entry 0
// is the pad/unknown row and is always 0); the ranking sorts ids by
// descending score, ties by ascending id.
struct ImportanceTable {
  std::vector<double> score;  // size V+1
  std::vector<int> ranking;   // size V, word ids
  int filters = 0, width = 0, emb_dim = 0;

  void save_tsv(const std::string& path, const Vocabulary& vocab) const;
};

// score(w) = sum_f sum_s sum_i | w_i * Filter[f,s,i] |, summed with a triple
// loop in double precision.
ImportanceTable word_importance_bruteforce(const EmbeddingMatrix& emb,
                                           const nn::Conv1dParams<float>& filt);

// Same scores via the factored form score(w) = sum_i |w_i| * A_i with
// A_i = sum_{f,s} |Filter[f,s,i]|; O(V*I + F*S*I).
ImportanceTable word_importance_fast(const EmbeddingMatrix& emb,
                                     const nn::Conv1dParams<float>& filt);

// First ceil(keep_fraction * V) words of the ranking.
std::vector<std::string> rank_words(const ImportanceTable& table, const Vocabulary& vocab,
                                    double keep_fraction);

// Permutes the width-position slices (each a full in_channels vector)
// independently inside every filter; biases untouched.
nn::Conv1dParams<float> shuffle_within_filters(const nn::Conv1dParams<float>& filt,
                                               uint64_t seed);

// Permutes all F*S position slices across the whole filter bank.
nn::Conv1dParams<float> shuffle_across_filters(const nn::Conv1dParams<float>& filt,
                                               uint64_t seed);

// Fresh Glorot-uniform weights and zero bias of the same shape.
nn::Conv1dParams<float> randomize_first_layer(const nn::Conv1dParams<float>& filt,
                                              uint64_t seed);

struct Clustering {
  int k = 0;
  std::vector<int> assignment;     // row -> cluster id
  std::vector<double> centroids;   // k x dim, row-major
  int dim = 0;
  double sse = 0.0;
  std::vector<int64_t> sizes;      // per-cluster counts
  std::vector<double> sse_trace;   // SSE after each Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding; assignment ties go to the lowest
// centroid id. rows is N x dim row-major.
Clustering kmeans(const std::vector<float>& rows, int64_t n, int dim, int k, uint64_t seed,
                  int max_iter = 100, double tol = 1e-4);

struct ClusterReportRow {
  int k = 0;
  double sse = 0.0;
  int64_t top_word_count = 0;   // word rows in the most word-populated cluster
  double top_word_percent = 0.0;
  double filter_fraction = 0.0;  // share of filter rows in that cluster
};

// The clustering covers V word rows followed by `filter_rows` filter-slice
// rows; element counts use the word rows only.
ClusterReportRow cluster_report(const Clustering& clustering, int64_t word_count,
                                int64_t filter_rows);

struct Projection2D {
  std::vector<double> coords;      // N x 2 row-major
  std::vector<double> components;  // 2 x dim, orthonormal
  int dim = 0;
  std::vector<double> eigenvalues;  // top-2 variances
};

// Mean-centered top-2 PCA via eigendecomposition of the covariance matrix;
// sign fixed so each component's largest-magnitude entry is positive.
Projection2D pca2(const std::vector<float>& rows, int64_t n, int dim);

// rows = embedding rows 1..V followed by the F*S filter slices
std::vector<float> concat_words_and_filters(const EmbeddingMatrix& emb,
                                            const nn::Conv1dParams<float>& filt);

void save_projection_tsv(const std::string& path, const Projection2D& proj,
                         const std::vector<std::string>& label_types,
                         const std::vector<std::string>& labels);

}  // namespace textcnn
