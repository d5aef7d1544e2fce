#include "textcnnlab/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "textcnnlab/util.hpp"

namespace textcnn {

namespace {

std::vector<int> ranking_from_scores(const std::vector<double>& score) {
  std::vector<int> ranking(score.size() > 0 ? score.size() - 1 : 0);
  std::iota(ranking.begin(), ranking.end(), 1);
  std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
    if (score[static_cast<size_t>(a)] != score[static_cast<size_t>(b)])
      return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)];
    return a < b;
  });
  return ranking;
}

}  // namespace

void ImportanceTable::save_tsv(const std::string& path, const Vocabulary& vocab) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write importance table: " + path);
  int rank = 1;
  for (int id : ranking) {
    out << rank++ << "\t" << vocab.word_of(id) << "\t"
        << format_sig9(score[static_cast<size_t>(id)]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ImportanceTable word_importance_bruteforce(const EmbeddingMatrix& emb,
                                           const nn::Conv1dParams<float>& filt) {
  if (filt.in_channels != emb.dim)
    throw std::invalid_argument("word_importance: filter channels != embedding dim");
  const int F = filt.filters, S = filt.width, I = filt.in_channels;
  ImportanceTable table;
  table.filters = F;
  table.width = S;
  table.emb_dim = I;
  table.score.assign(static_cast<size_t>(emb.vocab_size) + 1, 0.0);
  for (int id = 1; id <= emb.vocab_size; ++id) {
    const float* w = emb.row(id);
    double sum = 0.0;
    for (int f = 0; f < F; ++f)
      for (int s = 0; s < S; ++s) {
        const float* slice = filt.slice(f, s);
        for (int i = 0; i < I; ++i)
          sum += std::abs(static_cast<double>(w[i]) * static_cast<double>(slice[i]));
      }
    table.score[static_cast<size_t>(id)] = sum;
  }
  table.ranking = ranking_from_scores(table.score);
  return table;
}

ImportanceTable word_importance_fast(const EmbeddingMatrix& emb,
                                     const nn::Conv1dParams<float>& filt) {
  if (filt.in_channels != emb.dim)
    throw std::invalid_argument("word_importance: filter channels != embedding dim");
  const int F = filt.filters, S = filt.width, I = filt.in_channels;
  std::vector<double> abs_filter_sum(static_cast<size_t>(I), 0.0);
  for (int f = 0; f < F; ++f)
    for (int s = 0; s < S; ++s) {
      const float* slice = filt.slice(f, s);
      for (int i = 0; i < I; ++i)
        abs_filter_sum[static_cast<size_t>(i)] += std::abs(static_cast<double>(slice[i]));
    }

  ImportanceTable table;
  table.filters = F;
  table.width = S;
  table.emb_dim = I;
  table.score.assign(static_cast<size_t>(emb.vocab_size) + 1, 0.0);
  for (int id = 1; id <= emb.vocab_size; ++id) {
    const float* w = emb.row(id);
    double sum = 0.0;
    for (int i = 0; i < I; ++i)
      sum += std::abs(static_cast<double>(w[i])) * abs_filter_sum[static_cast<size_t>(i)];
    table.score[static_cast<size_t>(id)] = sum;
  }
  table.ranking = ranking_from_scores(table.score);
  return table;
}

std::vector<std::string> rank_words(const ImportanceTable& table, const Vocabulary& vocab,
                                    double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("rank_words: keep_fraction must be in (0, 1]");
  if (static_cast<int>(table.ranking.size()) != vocab.size())
    throw std::invalid_argument("rank_words: table does not match vocabulary");
  const auto take = static_cast<size_t>(ceil_fraction(vocab.size(), keep_fraction));
  std::vector<std::string> words;
  words.reserve(take);
  for (size_t i = 0; i < take; ++i) words.push_back(vocab.word_of(table.ranking[i]));
  return words;
}

nn::Conv1dParams<float> shuffle_within_filters(const nn::Conv1dParams<float>& filt,
                                               uint64_t seed) {
  nn::Conv1dParams<float> out = filt;
  Rng rng(seed);
  std::vector<int> perm(static_cast<size_t>(filt.width));
  for (int f = 0; f < filt.filters; ++f) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int s = 0; s < filt.width; ++s) {
      const float* src = filt.slice(f, perm[static_cast<size_t>(s)]);
      std::copy(src, src + filt.in_channels, out.slice(f, s));
    }
  }
  return out;
}

nn::Conv1dParams<float> shuffle_across_filters(const nn::Conv1dParams<float>& filt,
                                               uint64_t seed) {
  nn::Conv1dParams<float> out = filt;
  Rng rng(seed);
  const int total = filt.filters * filt.width;
  std::vector<int> perm(static_cast<size_t>(total));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  for (int p = 0; p < total; ++p) {
    const int q = perm[static_cast<size_t>(p)];
    const float* src = filt.slice(q / filt.width, q % filt.width);
    std::copy(src, src + filt.in_channels, out.slice(p / filt.width, p % filt.width));
  }
  return out;
}

nn::Conv1dParams<float> randomize_first_layer(const nn::Conv1dParams<float>& filt,
                                              uint64_t seed) {
  nn::Conv1dParams<float> out(filt.filters, filt.width, filt.in_channels, filt.stride);
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / (filt.width * filt.in_channels +
                                        filt.width * filt.filters));
  for (auto& v : out.weights.data) v = static_cast<float>(rng.uniform(-limit, limit));
  return out;  // bias stays zero
}

// ---------------------------------------------------------------------------
// k-means (Lloyd, k-means++ seeding)
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const float* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

// partial-distance variant: gives up once the running sum reaches `bound`;
// selection results are identical to the full computation
double sq_dist_bounded(const float* a, const double* b, int dim, double bound) {
  double s = 0.0;
  int i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (int j = 0; j < 8; ++j) {
      const double d = static_cast<double>(a[i + j]) - b[i + j];
      s += d * d;
    }
    if (s >= bound) return s;
  }
  for (; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Clustering kmeans(const std::vector<float>& rows, int64_t n, int dim, int k, uint64_t seed,
                  int max_iter, double tol) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (n < k) throw std::invalid_argument("kmeans: k exceeds the number of rows");
  if (static_cast<int64_t>(rows.size()) != n * dim)
    throw std::invalid_argument("kmeans: rows buffer does not match n x dim");

  Clustering cl;
  cl.k = k;
  cl.dim = dim;
  cl.assignment.assign(static_cast<size_t>(n), 0);
  cl.centroids.assign(static_cast<size_t>(k) * dim, 0.0);

  Rng rng(seed);
  // k-means++ seeding
  std::vector<double> best_d2(static_cast<size_t>(n), std::numeric_limits<double>::max());
  {
    const auto first = static_cast<int64_t>(rng.index(static_cast<size_t>(n)));
    for (int d = 0; d < dim; ++d)
      cl.centroids[static_cast<size_t>(d)] = rows[static_cast<size_t>(first) * dim + d];
    for (int64_t i = 0; i < n; ++i)
      best_d2[static_cast<size_t>(i)] =
          sq_dist(&rows[static_cast<size_t>(i) * dim], cl.centroids.data(), dim);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int64_t i = 0; i < n; ++i) total += best_d2[static_cast<size_t>(i)];
      int64_t chosen = -1;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double cum = 0.0;
        for (int64_t i = 0; i < n; ++i) {
          cum += best_d2[static_cast<size_t>(i)];
          if (r <= cum) {
            chosen = i;
            break;
          }
        }
        if (chosen < 0) chosen = n - 1;
      } else {
        chosen = static_cast<int64_t>(rng.index(static_cast<size_t>(n)));
      }
      double* cen = &cl.centroids[static_cast<size_t>(c) * dim];
      for (int d = 0; d < dim; ++d) cen[d] = rows[static_cast<size_t>(chosen) * dim + d];
      for (int64_t i = 0; i < n; ++i) {
        const double d2 = sq_dist(&rows[static_cast<size_t>(i) * dim], cen, dim);
        if (d2 < best_d2[static_cast<size_t>(i)]) best_d2[static_cast<size_t>(i)] = d2;
      }
    }
  }

  std::vector<double> sums(static_cast<size_t>(k) * dim);
  std::vector<int64_t> counts(static_cast<size_t>(k));
  double prev_sse = std::numeric_limits<double>::max();
  for (int iter = 0; iter < max_iter; ++iter) {
    // assignment
    double sse = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const float* p = &rows[static_cast<size_t>(i) * dim];
      double best = std::numeric_limits<double>::max();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d2 =
            sq_dist_bounded(p, &cl.centroids[static_cast<size_t>(c) * dim], dim, best);
        if (d2 < best) {  // strict: ties stay with the lowest centroid id
          best = d2;
          best_c = c;
        }
      }
      cl.assignment[static_cast<size_t>(i)] = best_c;
      sse += best;
    }
    cl.sse = sse;
    cl.sse_trace.push_back(sse);

    // update
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int64_t i = 0; i < n; ++i) {
      const int c = cl.assignment[static_cast<size_t>(i)];
      const float* p = &rows[static_cast<size_t>(i) * dim];
      double* s = &sums[static_cast<size_t>(c) * dim];
      for (int d = 0; d < dim; ++d) s[d] += p[d];
      ++counts[static_cast<size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      double* cen = &cl.centroids[static_cast<size_t>(c) * dim];
      if (counts[static_cast<size_t>(c)] > 0) {
        const double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
        for (int d = 0; d < dim; ++d) cen[d] = sums[static_cast<size_t>(c) * dim + d] * inv;
      } else {
        // deterministic empty-cluster rescue: relocate to the row farthest
        // from its current centroid
        double far_d = -1.0;
        int64_t far_i = 0;
        for (int64_t i = 0; i < n; ++i) {
          const int a = cl.assignment[static_cast<size_t>(i)];
          const double d2 = sq_dist(&rows[static_cast<size_t>(i) * dim],
                                    &cl.centroids[static_cast<size_t>(a) * dim], dim);
          if (d2 > far_d) {
            far_d = d2;
            far_i = i;
          }
        }
        for (int d = 0; d < dim; ++d) cen[d] = rows[static_cast<size_t>(far_i) * dim + d];
      }
    }

    if (prev_sse - sse < tol) break;
    prev_sse = sse;
  }

  // final assignment against the last centroid update
  double sse = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const float* p = &rows[static_cast<size_t>(i) * dim];
    double best = std::numeric_limits<double>::max();
    int best_c = 0;
    for (int c = 0; c < k; ++c) {
      const double d2 =
          sq_dist_bounded(p, &cl.centroids[static_cast<size_t>(c) * dim], dim, best);
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    cl.assignment[static_cast<size_t>(i)] = best_c;
    sse += best;
  }
  cl.sse = sse;
  cl.sse_trace.push_back(sse);

  cl.sizes.assign(static_cast<size_t>(k), 0);
  for (int64_t i = 0; i < n; ++i) ++cl.sizes[static_cast<size_t>(cl.assignment[static_cast<size_t>(i)])];
  return cl;
}

ClusterReportRow cluster_report(const Clustering& clustering, int64_t word_count,
                                int64_t filter_rows) {
  if (static_cast<int64_t>(clustering.assignment.size()) != word_count + filter_rows)
    throw std::invalid_argument("cluster_report: row count != words + filter rows");
  std::vector<int64_t> word_sizes(static_cast<size_t>(clustering.k), 0);
  for (int64_t i = 0; i < word_count; ++i)
    ++word_sizes[static_cast<size_t>(clustering.assignment[static_cast<size_t>(i)])];
  int top_cluster = 0;
  for (int c = 1; c < clustering.k; ++c)
    if (word_sizes[static_cast<size_t>(c)] > word_sizes[static_cast<size_t>(top_cluster)])
      top_cluster = c;

  int64_t filters_in_top = 0;
  for (int64_t i = word_count; i < word_count + filter_rows; ++i)
    filters_in_top += clustering.assignment[static_cast<size_t>(i)] == top_cluster ? 1 : 0;

  ClusterReportRow row;
  row.k = clustering.k;
  row.sse = clustering.sse;
  row.top_word_count = word_sizes[static_cast<size_t>(top_cluster)];
  row.top_word_percent =
      100.0 * static_cast<double>(row.top_word_count) / static_cast<double>(word_count);
  row.filter_fraction =
      filter_rows > 0 ? static_cast<double>(filters_in_top) / static_cast<double>(filter_rows)
                      : 0.0;
  return row;
}

// ---------------------------------------------------------------------------
// PCA via cyclic Jacobi on the covariance matrix
// ---------------------------------------------------------------------------

namespace {

// eigendecomposition of a symmetric matrix, returns (eigenvalues, row-major
// eigenvectors), sorted by descending eigenvalue
std::pair<std::vector<double>, std::vector<double>> jacobi_eigen(std::vector<double> a, int n) {
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[static_cast<size_t>(p) * n + q] * a[static_cast<size_t>(p) * n + q];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[static_cast<size_t>(p) * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[static_cast<size_t>(p) * n + p];
        const double aqq = a[static_cast<size_t>(q) * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a[static_cast<size_t>(i) * n + p];
          const double aiq = a[static_cast<size_t>(i) * n + q];
          a[static_cast<size_t>(i) * n + p] = c * aip - s * aiq;
          a[static_cast<size_t>(i) * n + q] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a[static_cast<size_t>(p) * n + i];
          const double aqi = a[static_cast<size_t>(q) * n + i];
          a[static_cast<size_t>(p) * n + i] = c * api - s * aqi;
          a[static_cast<size_t>(q) * n + i] = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v[static_cast<size_t>(i) * n + p];
          const double viq = v[static_cast<size_t>(i) * n + q];
          v[static_cast<size_t>(i) * n + p] = c * vip - s * viq;
          v[static_cast<size_t>(i) * n + q] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return a[static_cast<size_t>(x) * n + x] > a[static_cast<size_t>(y) * n + y];
  });
  std::vector<double> eigvals(static_cast<size_t>(n));
  std::vector<double> eigvecs(static_cast<size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    const int src = order[static_cast<size_t>(r)];
    eigvals[static_cast<size_t>(r)] = a[static_cast<size_t>(src) * n + src];
    for (int i = 0; i < n; ++i)
      eigvecs[static_cast<size_t>(r) * n + i] = v[static_cast<size_t>(i) * n + src];
  }
  return {std::move(eigvals), std::move(eigvecs)};
}

}  // namespace

Projection2D pca2(const std::vector<float>& rows, int64_t n, int dim) {
  if (n < 2) throw std::invalid_argument("pca2: need at least 2 rows");
  if (static_cast<int64_t>(rows.size()) != n * dim)
    throw std::invalid_argument("pca2: rows buffer does not match n x dim");

  std::vector<double> mean(static_cast<size_t>(dim), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) mean[static_cast<size_t>(d)] += rows[static_cast<size_t>(i) * dim + d];
  for (int d = 0; d < dim; ++d) mean[static_cast<size_t>(d)] /= static_cast<double>(n);

  std::vector<double> cov(static_cast<size_t>(dim) * dim, 0.0);
  std::vector<double> centered(static_cast<size_t>(dim));
  for (int64_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d)
      centered[static_cast<size_t>(d)] =
          static_cast<double>(rows[static_cast<size_t>(i) * dim + d]) - mean[static_cast<size_t>(d)];
    for (int p = 0; p < dim; ++p) {
      const double cp = centered[static_cast<size_t>(p)];
      if (cp == 0.0) continue;
      for (int q = p; q < dim; ++q)
        cov[static_cast<size_t>(p) * dim + q] += cp * centered[static_cast<size_t>(q)];
    }
  }
  double total_var = 0.0;
  for (int p = 0; p < dim; ++p) {
    for (int q = p; q < dim; ++q) {
      const double val = cov[static_cast<size_t>(p) * dim + q] / static_cast<double>(n - 1);
      cov[static_cast<size_t>(p) * dim + q] = val;
      cov[static_cast<size_t>(q) * dim + p] = val;
    }
    total_var += cov[static_cast<size_t>(p) * dim + p];
  }
  if (total_var <= 0.0) throw std::runtime_error("pca2: input has zero variance");

  auto [eigvals, eigvecs] = jacobi_eigen(cov, dim);

  Projection2D proj;
  proj.dim = dim;
  proj.eigenvalues = {eigvals[0], dim > 1 ? eigvals[1] : 0.0};
  proj.components.assign(static_cast<size_t>(2) * dim, 0.0);
  for (int r = 0; r < 2 && r < dim; ++r) {
    // sign convention: the largest-magnitude entry is positive
    int arg = 0;
    for (int d = 1; d < dim; ++d)
      if (std::abs(eigvecs[static_cast<size_t>(r) * dim + d]) >
          std::abs(eigvecs[static_cast<size_t>(r) * dim + arg]))
        arg = d;
    const double flip = eigvecs[static_cast<size_t>(r) * dim + arg] < 0 ? -1.0 : 1.0;
    for (int d = 0; d < dim; ++d)
      proj.components[static_cast<size_t>(r) * dim + d] =
          flip * eigvecs[static_cast<size_t>(r) * dim + d];
  }

  proj.coords.assign(static_cast<size_t>(n) * 2, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    for (int r = 0; r < 2; ++r) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d)
        s += (static_cast<double>(rows[static_cast<size_t>(i) * dim + d]) -
              mean[static_cast<size_t>(d)]) *
             proj.components[static_cast<size_t>(r) * dim + d];
      proj.coords[static_cast<size_t>(i) * 2 + r] = s;
    }
  }
  return proj;
}

std::vector<float> concat_words_and_filters(const EmbeddingMatrix& emb,
                                            const nn::Conv1dParams<float>& filt) {
  if (filt.in_channels != emb.dim)
    throw std::invalid_argument("concat_words_and_filters: dimension mismatch");
  std::vector<float> rows;
  rows.reserve(static_cast<size_t>(emb.vocab_size + filt.filters * filt.width) * emb.dim);
  for (int id = 1; id <= emb.vocab_size; ++id)
    rows.insert(rows.end(), emb.row(id), emb.row(id) + emb.dim);
  for (int f = 0; f < filt.filters; ++f)
    for (int s = 0; s < filt.width; ++s)
      rows.insert(rows.end(), filt.slice(f, s), filt.slice(f, s) + filt.in_channels);
  return rows;
}

void save_projection_tsv(const std::string& path, const Projection2D& proj,
                         const std::vector<std::string>& label_types,
                         const std::vector<std::string>& labels) {
  const size_t n = labels.size();
  if (label_types.size() != n || proj.coords.size() != n * 2)
    throw std::invalid_argument("save_projection_tsv: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write projection: " + path);
  for (size_t i = 0; i < n; ++i) {
    out << label_types[i] << "\t" << labels[i] << "\t" << format_sig9(proj.coords[i * 2])
        << "\t" << format_sig9(proj.coords[i * 2 + 1]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace textcnn
