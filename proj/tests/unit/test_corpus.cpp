#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "textcnnlab/corpus.hpp"
#include "textcnnlab/util.hpp"

using namespace textcnn;
namespace fs = std::filesystem;

namespace {

FilterRules basic_rules(std::initializer_list<std::string> dict,
                        std::initializer_list<std::string> stop = {}) {
  FilterRules r;
  for (const auto& w : dict) r.dictionary_set.insert(w);
  for (const auto& w : stop) r.stopword_set.insert(w);
  return r;
}

Vocabulary vocab_of(std::initializer_list<std::string> words) {
  std::vector<std::string> w(words);
  std::vector<int64_t> counts(w.size(), 1);
  return Vocabulary(std::move(w), std::move(counts));
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("textcnn_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("tokenizer removes tags, numbers, punctuation, stopwords and non-dictionary words") {
  const auto rules = basic_rules({"great", "movie", "runs", "fast"}, {"the", "a", "an", "of"});
  CHECK(tokenize_and_filter("<br />Great movie, 10/10!!", rules) ==
        std::vector<std::string>({"great", "movie"}));
  CHECK(tokenize_and_filter("the a an of", rules).empty());
  CHECK(tokenize_and_filter("Xqzwv runs fast", rules) ==
        std::vector<std::string>({"runs", "fast"}));
}

TEST_CASE("tokenizer edge cases") {
  const auto rules = basic_rules({"great", "movie"});
  CHECK(tokenize_and_filter("", rules).empty());
  CHECK(tokenize_and_filter("<b>only<i>tags</i></b>", rules).empty());
  // an unterminated tag swallows the tail
  CHECK(tokenize_and_filter("great <unterminated movie", rules) ==
        std::vector<std::string>({"great"}));
  // order preserved
  CHECK(tokenize_and_filter("movie GREAT movie", rules) ==
        std::vector<std::string>({"movie", "great", "movie"}));
}

TEST_CASE("vocabulary orders by descending frequency, ties lexicographic") {
  const Vocabulary v = build_vocabulary({{"a", "b", "a"}}, 1);
  CHECK(v.size() == 2);
  CHECK(v.id_of("a") == 1);
  CHECK(v.id_of("b") == 2);

  const Vocabulary v2 = build_vocabulary({{"a", "b"}, {"b"}}, 2);
  CHECK(v2.size() == 1);
  CHECK(v2.id_of("b") == 1);
  CHECK(v2.id_of("a") == 0);

  // tie at equal frequency: lexicographic
  const Vocabulary v3 = build_vocabulary({{"zebra", "apple"}}, 1);
  CHECK(v3.id_of("apple") == 1);
  CHECK(v3.id_of("zebra") == 2);

  CHECK_THROWS(build_vocabulary({}, 1));
  CHECK_THROWS(build_vocabulary({{"a"}}, 2));  // everything filtered out
}

TEST_CASE("encode pads, truncates and drops out-of-vocabulary tokens") {
  const Vocabulary v = vocab_of({"w1", "w2", "w3", "w4", "w5", "w6", "good"});
  CHECK(v.id_of("good") == 7);
  CHECK(encode({"good"}, v, 4) == std::vector<int>({7, 0, 0, 0}));

  std::vector<std::string> long_tokens(300, "good");
  const auto ids = encode(long_tokens, v, 250);
  CHECK(ids.size() == 250);
  for (int id : ids) CHECK(id == 7);

  CHECK(encode({"zzz", "yyy"}, v, 3) == std::vector<int>({0, 0, 0}));

  // dropped, not mapped to 0: in-vocab tokens slide left past unknown ones
  CHECK(encode({"zzz", "good", "w1"}, v, 4) == std::vector<int>({7, 1, 0, 0}));
}

TEST_CASE("encode is idempotent over its own decoded sequence") {
  const Vocabulary v = vocab_of({"alpha", "beta", "gamma"});
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> tokens;
    const size_t len = rng.index(30);
    for (size_t i = 0; i < len; ++i) {
      const char* pool[] = {"alpha", "beta", "gamma", "unknown"};
      tokens.push_back(pool[rng.index(4)]);
    }
    const auto ids = encode(tokens, v, 16);
    const auto again = encode(decode(ids, v), v, 16);
    CHECK(ids == again);
  }
}

TEST_CASE("split_train_val arithmetic, determinism and balance") {
  std::vector<EncodedReview> reviews;
  for (int i = 0; i < 10; ++i)
    reviews.push_back(EncodedReview{std::vector<int>(4, 1), i % 2});
  auto [train, val] = split_train_val(reviews, "h", 0.9, 42);
  CHECK(train.reviews.size() == 9);
  CHECK(val.reviews.size() == 1);
  CHECK(train.split_tag == "train");

  auto [train2, val2] = split_train_val(reviews, "h", 0.9, 42);
  REQUIRE(train2.reviews.size() == train.reviews.size());
  for (size_t i = 0; i < train.reviews.size(); ++i) {
    CHECK(train.reviews[i].label == train2.reviews[i].label);
    CHECK(train.reviews[i].ids == train2.reviews[i].ids);
  }

  // balance within 2 points on a larger balanced set
  std::vector<EncodedReview> big;
  for (int i = 0; i < 1000; ++i) big.push_back(EncodedReview{std::vector<int>(4, 1), i % 2});
  auto [btrain, bval] = split_train_val(big, "h", 0.9, 7);
  auto share = [](const EncodedDataset& d) {
    int64_t pos = 0;
    for (const auto& r : d.reviews) pos += r.label;
    return static_cast<double>(pos) / static_cast<double>(d.reviews.size());
  };
  CHECK(std::abs(share(btrain) - 0.5) <= 0.02);
  CHECK(std::abs(share(bval) - 0.5) <= 0.02);

  CHECK_THROWS(split_train_val({}, "h", 0.9, 1));
  CHECK_THROWS(split_train_val(reviews, "h", 1.5, 1));
}

TEST_CASE("prune and complement reproduce the reference word counts at V=23363") {
  std::vector<std::string> words;
  std::vector<int64_t> counts;
  for (int i = 0; i < 23363; ++i) {
    words.push_back("w" + std::to_string(i));
    counts.push_back(1);
  }
  const Vocabulary v(std::move(words), std::move(counts));
  const std::vector<std::string> ranked = v.words();

  const std::pair<double, int> expected[] = {{0.8, 18691}, {0.5, 11682}, {0.1, 2337},
                                             {0.05, 1169}, {0.01, 234},  {0.005, 117}};
  for (const auto& [f, want] : expected) {
    const Vocabulary pruned = prune_vocabulary(v, ranked, f);
    CHECK(pruned.size() == want);
    const Vocabulary rest = complement_vocabulary(v, ranked, f);
    CHECK(pruned.size() + rest.size() == v.size());
  }
  CHECK(complement_vocabulary(v, ranked, 0.05).size() == 22194);
  CHECK(prune_vocabulary(v, ranked, 1.0).size() == v.size());
}

TEST_CASE("prune preserves rank order with dense re-ids") {
  const Vocabulary v = vocab_of({"one", "two", "three", "four"});
  const std::vector<std::string> ranked = {"three", "one", "four", "two"};
  const Vocabulary pruned = prune_vocabulary(v, ranked, 0.5);
  CHECK(pruned.size() == 2);
  CHECK(pruned.id_of("three") == 1);
  CHECK(pruned.id_of("one") == 2);
  CHECK(pruned.id_of("four") == 0);

  CHECK_THROWS(prune_vocabulary(v, {"three", "one"}, 0.5));           // not a permutation
  CHECK_THROWS(prune_vocabulary(v, {"a", "b", "c", "d"}, 0.5));       // alien words
  CHECK_THROWS_WITH(complement_vocabulary(v, ranked, 1.0), "empty vocabulary");
  CHECK(complement_vocabulary(v, ranked, 0.0).size() == 4);
}

TEST_CASE("load_review_dir labels, ordering and error paths") {
  TempDir dir("ingest");
  write_file(dir.path / "pos" / "b.txt", "good movie");
  write_file(dir.path / "pos" / "a.txt", "fine film");
  write_file(dir.path / "neg" / "x.txt", "bad");
  write_file(dir.path / "neg" / "m.txt", "awful");
  write_file(dir.path / "neg" / "z.txt", "terrible");

  const auto [reviews, report] = load_review_dir(dir.path.string());
  REQUIRE(reviews.size() == 5);
  std::vector<int> labels;
  for (const auto& r : reviews) labels.push_back(r.label);
  CHECK(labels == std::vector<int>({1, 1, 0, 0, 0}));
  CHECK(reviews[0].source_id == "a");  // lexicographic within each directory
  CHECK(reviews[1].source_id == "b");
  CHECK(reviews[2].source_id == "m");

  CHECK_THROWS_WITH_AS(load_review_dir((dir.path / "missing").string()),
                       doctest::Contains("missing"), std::runtime_error);

  // non-UTF-8 files are skipped with a warning
  write_file(dir.path / "pos" / "bad.txt", std::string("\xff\xfe\x80 broken", 10));
  const auto [reviews2, report2] = load_review_dir(dir.path.string());
  CHECK(reviews2.size() == 5);
  CHECK(report2.skipped_non_utf8 == 1);
  REQUIRE(!report2.warnings.empty());
}

TEST_CASE("empty review directory warns and returns nothing") {
  TempDir dir("empty");
  fs::create_directories(dir.path / "pos");
  fs::create_directories(dir.path / "neg");
  const auto [reviews, report] = load_review_dir(dir.path.string());
  CHECK(reviews.empty());
  REQUIRE(!report.warnings.empty());
  CHECK(report.warnings.back() == "0 reviews ingested");
}

TEST_CASE("vocabulary TSV round-trips with header and id order") {
  TempDir dir("vocab");
  const Vocabulary v = build_vocabulary({{"b", "b", "a", "c", "c", "c"}}, 1);
  const auto path = (dir.path / "vocab.tsv").string();
  v.save_tsv(path);

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "#V=3");

  const Vocabulary loaded = Vocabulary::load_tsv(path);
  CHECK(loaded.size() == 3);
  CHECK(loaded.id_of("c") == 1);
  CHECK(loaded.count_of("c") == 3);
  CHECK(loaded.hash() == v.hash());
}

TEST_CASE("encoded dataset file round-trips") {
  TempDir dir("dataset");
  EncodedDataset ds;
  ds.vocab_hash = "h";
  ds.split_tag = "train";
  ds.reviews.push_back(EncodedReview{{1, 2, 3, 0, 0}, 1});
  ds.reviews.push_back(EncodedReview{{4, 0, 0, 0, 0}, 0});
  const auto path = (dir.path / "train.tsv").string();
  ds.save(path);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "1\t1,2,3,0,0");

  const EncodedDataset loaded = EncodedDataset::load(path, "h", "train");
  REQUIRE(loaded.reviews.size() == 2);
  CHECK(loaded.reviews[0].ids == ds.reviews[0].ids);
  CHECK(loaded.reviews[1].label == 0);
}

TEST_CASE("every encoded review keeps length and id-range invariants") {
  const Vocabulary v = vocab_of({"p", "q", "r"});
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    for (size_t i = 0; i < rng.index(400); ++i) {
      const char* pool[] = {"p", "q", "r", "unk"};
      tokens.push_back(pool[rng.index(4)]);
    }
    const auto ids = encode(tokens, v);
    REQUIRE(ids.size() == 250);
    bool in_pad_suffix = false;
    for (int id : ids) {
      CHECK(id >= 0);
      CHECK(id <= v.size());
      if (id == 0) in_pad_suffix = true;
      else CHECK(!in_pad_suffix);  // pads form a contiguous suffix
    }
  }
}
