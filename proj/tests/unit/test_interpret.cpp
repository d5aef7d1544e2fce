#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "textcnnlab/interpret.hpp"
#include "textcnnlab/util.hpp"

using namespace textcnn;

namespace {

EmbeddingMatrix random_emb(int V, int dim, uint64_t seed, double scale = 1.0) {
  EmbeddingMatrix emb(V, dim, "h");
  Rng rng(seed);
  for (int id = 1; id <= V; ++id)
    for (int d = 0; d < dim; ++d)
      emb.row(id)[d] = static_cast<float>(rng.uniform(-scale, scale));
  return emb;
}

nn::Conv1dParams<float> random_filters(int F, int S, int C, uint64_t seed) {
  nn::Conv1dParams<float> p(F, S, C);
  Rng rng(seed);
  for (auto& w : p.weights.data) w = static_cast<float>(rng.uniform(-1, 1));
  return p;
}

// order-of-summation oracle: loops run i, s, f instead of f, s, i
double importance_reversed_loops(const EmbeddingMatrix& emb,
                                 const nn::Conv1dParams<float>& filt, int id) {
  double sum = 0.0;
  for (int i = 0; i < filt.in_channels; ++i)
    for (int s = 0; s < filt.width; ++s)
      for (int f = 0; f < filt.filters; ++f)
        sum += std::abs(static_cast<double>(emb.row(id)[i]) *
                        static_cast<double>(filt.slice(f, s)[i]));
  return sum;
}

// multiset of position slices, as sorted vectors of sorted slices
std::multiset<std::vector<float>> slice_multiset(const nn::Conv1dParams<float>& p, int f = -1) {
  std::multiset<std::vector<float>> out;
  for (int ff = 0; ff < p.filters; ++ff) {
    if (f >= 0 && ff != f) continue;
    for (int s = 0; s < p.width; ++s)
      out.insert(std::vector<float>(p.slice(ff, s), p.slice(ff, s) + p.in_channels));
  }
  return out;
}

}  // namespace

TEST_CASE("importance of the zero vector is zero and single-term case is exact") {
  EmbeddingMatrix emb(2, 1, "h");
  emb.row(1)[0] = 2.0f;  // word 1 = [2]; word 2 stays zero
  nn::Conv1dParams<float> filt(1, 1, 1);
  filt.weights.data = {-3.0f};

  const ImportanceTable t = word_importance_bruteforce(emb, filt);
  CHECK(t.score[1] == doctest::Approx(6.0));  // |2 * (-3)|
  CHECK(t.score[2] == 0.0);
  CHECK(t.score[0] == 0.0);
  CHECK(t.ranking == std::vector<int>({1, 2}));
}

TEST_CASE("brute-force importance matches the reversed-loop oracle") {
  const EmbeddingMatrix emb = random_emb(10, 3, 51);
  const auto filt = random_filters(2, 2, 3, 52);
  const ImportanceTable t = word_importance_bruteforce(emb, filt);
  for (int id = 1; id <= 10; ++id)
    CHECK(t.score[static_cast<size_t>(id)] ==
          doctest::Approx(importance_reversed_loops(emb, filt, id)).epsilon(1e-12));
}

TEST_CASE("fast importance equals brute force within 1e-9 relative") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const EmbeddingMatrix emb = random_emb(40, 7, 100 + seed);
    const auto filt = random_filters(4, 3, 7, 200 + seed);
    const ImportanceTable fast = word_importance_fast(emb, filt);
    const ImportanceTable brute = word_importance_bruteforce(emb, filt);
    for (int id = 1; id <= 40; ++id) {
      const double a = fast.score[static_cast<size_t>(id)];
      const double b = brute.score[static_cast<size_t>(id)];
      CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
    }
    CHECK(fast.ranking == brute.ranking);
  }
}

TEST_CASE("importance is absolutely homogeneous and sign-invariant") {
  EmbeddingMatrix emb = random_emb(5, 4, 3);
  auto filt = random_filters(3, 2, 4, 4);
  const ImportanceTable base = word_importance_fast(emb, filt);

  EmbeddingMatrix doubled = emb;
  for (int d = 0; d < 4; ++d) doubled.row(2)[d] *= 2.0f;
  const ImportanceTable scaled = word_importance_fast(doubled, filt);
  CHECK(scaled.score[2] == doctest::Approx(2.0 * base.score[2]).epsilon(1e-12));

  auto negated = filt;
  for (auto& w : negated.weights.data) w = -w;
  const ImportanceTable neg = word_importance_fast(emb, negated);
  for (int id = 1; id <= 5; ++id)
    CHECK(neg.score[static_cast<size_t>(id)] ==
          doctest::Approx(base.score[static_cast<size_t>(id)]).epsilon(1e-12));

  for (int id = 1; id <= 5; ++id) CHECK(base.score[static_cast<size_t>(id)] >= 0.0);
}

TEST_CASE("rank_words takes the ceiling prefix and breaks ties by id") {
  std::vector<std::string> words;
  std::vector<int64_t> counts;
  for (int i = 0; i < 10; ++i) {
    words.push_back("w" + std::to_string(i));
    counts.push_back(1);
  }
  const Vocabulary vocab(std::move(words), std::move(counts));
  ImportanceTable t;
  t.score.assign(11, 1.0);  // all equal -> ranking by ascending id
  t.score[0] = 0.0;
  std::vector<int> ids(10);
  for (int i = 0; i < 10; ++i) ids[static_cast<size_t>(i)] = i + 1;
  t.ranking = ids;
  CHECK(rank_words(t, vocab, 0.25).size() == 3);  // ceil(2.5)
  CHECK(rank_words(t, vocab, 1.0).size() == 10);
  CHECK(rank_words(t, vocab, 0.05) == std::vector<std::string>({"w0"}));
}

TEST_CASE("shuffle within filters permutes slices per filter only") {
  const auto filt = random_filters(4, 5, 6, 9);
  const auto shuffled = shuffle_within_filters(filt, 1234);

  for (int f = 0; f < 4; ++f) CHECK(slice_multiset(filt, f) == slice_multiset(shuffled, f));
  CHECK(filt.bias.data == shuffled.bias.data);
  CHECK(filt.weights.data != shuffled.weights.data);

  // S=1 has a single possible permutation
  const auto narrow = random_filters(3, 1, 4, 10);
  CHECK(shuffle_within_filters(narrow, 77).weights.data == narrow.weights.data);

  // determinism
  CHECK(shuffle_within_filters(filt, 1234).weights.data == shuffled.weights.data);
}

TEST_CASE("shuffle across filters preserves the global slice multiset") {
  const auto filt = random_filters(4, 5, 6, 11);
  const auto shuffled = shuffle_across_filters(filt, 99);
  CHECK(slice_multiset(filt) == slice_multiset(shuffled));
  CHECK(filt.bias.data == shuffled.bias.data);
  CHECK(shuffle_across_filters(filt, 99).weights.data == shuffled.weights.data);
  CHECK(shuffle_across_filters(filt, 100).weights.data != shuffled.weights.data);
}

TEST_CASE("both shuffles leave every importance score unchanged") {
  const EmbeddingMatrix emb = random_emb(30, 8, 21);
  const auto filt = random_filters(6, 4, 8, 22);
  const ImportanceTable base = word_importance_bruteforce(emb, filt);
  const ImportanceTable within =
      word_importance_bruteforce(emb, shuffle_within_filters(filt, 5));
  const ImportanceTable across =
      word_importance_bruteforce(emb, shuffle_across_filters(filt, 6));
  for (int id = 1; id <= 30; ++id) {
    const double b = base.score[static_cast<size_t>(id)];
    CHECK(std::abs(within.score[static_cast<size_t>(id)] - b) <= 1e-9 * std::max(1.0, b));
    CHECK(std::abs(across.score[static_cast<size_t>(id)] - b) <= 1e-9 * std::max(1.0, b));
  }
}

TEST_CASE("randomize_first_layer draws fresh bounded weights") {
  const auto filt = random_filters(32, 5, 100, 31);
  const auto fresh = randomize_first_layer(filt, 7);
  CHECK(fresh.weights.shape == std::vector<int>({32, 5, 100}));
  const double limit = std::sqrt(6.0 / (5 * 100 + 5 * 32));
  for (float w : fresh.weights.data) CHECK(std::abs(w) <= limit);
  for (float b : fresh.bias.data) CHECK(b == 0.0f);

  const auto fresh2 = randomize_first_layer(filt, 8);
  float max_diff = 0;
  for (size_t i = 0; i < fresh.weights.data.size(); ++i)
    max_diff = std::max(max_diff, std::abs(fresh.weights.data[i] - fresh2.weights.data[i]));
  CHECK(max_diff > 0.0f);
}

TEST_CASE("kmeans separates two blobs with the hand-computed SSE") {
  // blob A: (0,0), (0,2); blob B: (10,0), (10,2)
  const std::vector<float> rows = {0, 0, 0, 2, 10, 0, 10, 2};
  const Clustering cl = kmeans(rows, 4, 2, 2, 3);
  CHECK(cl.assignment[0] == cl.assignment[1]);
  CHECK(cl.assignment[2] == cl.assignment[3]);
  CHECK(cl.assignment[0] != cl.assignment[2]);
  // each blob's centroid is its mean, each point at squared distance 1
  CHECK(cl.sse == doctest::Approx(4.0));
  CHECK(cl.sizes == std::vector<int64_t>({2, 2}));
}

TEST_CASE("kmeans closed forms at k=1 and k=N") {
  const std::vector<float> rows = {1, 1, 3, 5, -2, 0};
  const Clustering one = kmeans(rows, 3, 2, 1, 5);
  // SSE = total squared deviation from the mean (2/3, 2)
  double want = 0.0;
  const double mx = 2.0 / 3.0, my = 2.0;
  const double xs[3] = {1, 3, -2}, ys[3] = {1, 5, 0};
  for (int i = 0; i < 3; ++i)
    want += (xs[i] - mx) * (xs[i] - mx) + (ys[i] - my) * (ys[i] - my);
  CHECK(one.sse == doctest::Approx(want).epsilon(1e-9));

  const Clustering all = kmeans(rows, 3, 2, 3, 5);
  CHECK(all.sse == doctest::Approx(0.0));

  CHECK_THROWS_AS(kmeans(rows, 3, 2, 4, 5), std::invalid_argument);
}

TEST_CASE("kmeans SSE never increases across Lloyd iterations") {
  Rng rng(61);
  std::vector<float> rows(200 * 6);
  for (auto& v : rows) v = static_cast<float>(rng.uniform(-3, 3));
  for (int k : {1, 2, 5, 9}) {
    const Clustering cl = kmeans(rows, 200, 6, k, 77);
    for (size_t i = 1; i < cl.sse_trace.size(); ++i)
      CHECK(cl.sse_trace[i] <= cl.sse_trace[i - 1] + 1e-9);
    CHECK(std::accumulate(cl.sizes.begin(), cl.sizes.end(), int64_t{0}) == 200);
  }
}

TEST_CASE("cluster_report counts words only and tracks filter membership") {
  // 6 word rows (4 near the origin, 2 far away) + 2 filter rows at the
  // populated group's mean
  const std::vector<float> rows = {0, 0,  0, 1,  0, 2,  1, 1,  50, 0,  50, 1,
                                   0, 1,  0, 1};
  const Clustering cl = kmeans(rows, 8, 2, 2, 1);
  const ClusterReportRow row = cluster_report(cl, 6, 2);
  CHECK(row.top_word_count == 4);
  CHECK(row.top_word_percent == doctest::Approx(100.0 * 4 / 6));
  CHECK(row.filter_fraction == doctest::Approx(1.0));

  // k=1 is 100 percent by definition
  const Clustering single = kmeans(rows, 8, 2, 1, 1);
  const ClusterReportRow all = cluster_report(single, 6, 2);
  CHECK(all.top_word_count == 6);
  CHECK(all.top_word_percent == doctest::Approx(100.0));
}

TEST_CASE("pca2 reconstructs planar data exactly") {
  // points on a plane spanned by two directions in 5-D
  Rng rng(71);
  std::vector<double> u = {1, 0, 1, 0, 1}, v = {0, 1, 0, -1, 0};
  std::vector<float> rows(40 * 5);
  for (int i = 0; i < 40; ++i) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (int d = 0; d < 5; ++d)
      rows[static_cast<size_t>(i) * 5 + d] = static_cast<float>(a * u[static_cast<size_t>(d)] + b * v[static_cast<size_t>(d)]);
  }
  const Projection2D proj = pca2(rows, 40, 5);

  // orthonormal components
  double n1 = 0, n2 = 0, dot = 0;
  for (int d = 0; d < 5; ++d) {
    n1 += proj.components[static_cast<size_t>(d)] * proj.components[static_cast<size_t>(d)];
    n2 += proj.components[static_cast<size_t>(5 + d)] * proj.components[static_cast<size_t>(5 + d)];
    dot += proj.components[static_cast<size_t>(d)] * proj.components[static_cast<size_t>(5 + d)];
  }
  CHECK(n1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dot == doctest::Approx(0.0).epsilon(1e-9));

  // reconstruction error 0 for rank-2 data
  std::vector<double> mean(5, 0.0);
  for (int i = 0; i < 40; ++i)
    for (int d = 0; d < 5; ++d) mean[static_cast<size_t>(d)] += rows[static_cast<size_t>(i) * 5 + d] / 40.0;
  double err = 0;
  for (int i = 0; i < 40; ++i)
    for (int d = 0; d < 5; ++d) {
      const double rec = mean[static_cast<size_t>(d)] +
                         proj.coords[static_cast<size_t>(i) * 2] * proj.components[static_cast<size_t>(d)] +
                         proj.coords[static_cast<size_t>(i) * 2 + 1] * proj.components[static_cast<size_t>(5 + d)];
      err = std::max(err, std::abs(rec - rows[static_cast<size_t>(i) * 5 + d]));
    }
  CHECK(err < 1e-5);
}

TEST_CASE("pca2 captures at least as much variance as random 2-D projections") {
  Rng rng(81);
  std::vector<float> rows(120 * 10);
  for (auto& v : rows) v = static_cast<float>(rng.uniform(-1, 1));
  // stretch two directions so there is structure to find
  for (int i = 0; i < 120; ++i) {
    rows[static_cast<size_t>(i) * 10] *= 6.0f;
    rows[static_cast<size_t>(i) * 10 + 3] *= 4.0f;
  }
  const Projection2D proj = pca2(rows, 120, 10);
  const double pca_var = proj.eigenvalues[0] + proj.eigenvalues[1];

  // variance captured by seeded random orthonormal pairs
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(10), b(10);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    double na = 0;
    for (double x : a) na += x * x;
    for (auto& x : a) x /= std::sqrt(na);
    double ab = 0;
    for (int d = 0; d < 10; ++d) ab += a[static_cast<size_t>(d)] * b[static_cast<size_t>(d)];
    for (int d = 0; d < 10; ++d) b[static_cast<size_t>(d)] -= ab * a[static_cast<size_t>(d)];
    double nb = 0;
    for (double x : b) nb += x * x;
    for (auto& x : b) x /= std::sqrt(nb);

    // sample variance along each direction
    double va = 0, vb = 0, ma = 0, mb = 0;
    for (int i = 0; i < 120; ++i) {
      double pa = 0, pb = 0;
      for (int d = 0; d < 10; ++d) {
        pa += rows[static_cast<size_t>(i) * 10 + d] * a[static_cast<size_t>(d)];
        pb += rows[static_cast<size_t>(i) * 10 + d] * b[static_cast<size_t>(d)];
      }
      ma += pa;
      mb += pb;
      va += pa * pa;
      vb += pb * pb;
    }
    ma /= 120;
    mb /= 120;
    va = va / 119 - ma * ma * 120 / 119;
    vb = vb / 119 - mb * mb * 120 / 119;
    CHECK(pca_var >= va + vb - 1e-9);
  }
}

TEST_CASE("pca2 is invariant to duplicating every row") {
  Rng rng(91);
  std::vector<float> rows(30 * 4);
  for (auto& v : rows) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<float> doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());

  const Projection2D p1 = pca2(rows, 30, 4);
  const Projection2D p2 = pca2(doubled, 60, 4);
  for (int i = 0; i < 30; ++i) {
    CHECK(p1.coords[static_cast<size_t>(i) * 2] ==
          doctest::Approx(p2.coords[static_cast<size_t>(i) * 2]).epsilon(1e-6));
    CHECK(p1.coords[static_cast<size_t>(i) * 2 + 1] ==
          doctest::Approx(p2.coords[static_cast<size_t>(i) * 2 + 1]).epsilon(1e-6));
  }

  // rank-0 input is rejected
  std::vector<float> flat(20 * 3, 1.0f);
  CHECK_THROWS_AS(pca2(flat, 20, 3), std::runtime_error);
}
