#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace textcnn {

struct RawReview {
  std::string text;
  int label = 0;  // positive = 1, negative = 0
  std::string source_id;
};

struct IngestReport {
  size_t files_seen = 0;
  size_t skipped_non_utf8 = 0;
  std::vector<std::string> warnings;
};

struct FilterRules {
  std::unordered_set<std::string> stopword_set;
  std::unordered_set<std::string> dictionary_set;
  bool strip_html = true;
  bool drop_numeric = true;
  bool drop_punct = true;

  static FilterRules load(const std::string& stopwords_path,
                          const std::string& dictionary_path);
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // words in id order (id = index + 1), with matching corpus counts
  Vocabulary(std::vector<std::string> words, std::vector<int64_t> counts);

  int size() const { return static_cast<int>(words_.size()); }  // V
  // 0 when the word is unknown; valid ids are 1..V
  int id_of(const std::string& word) const;
  const std::string& word_of(int id) const;  // id in [1, V]
  int64_t count_of(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<int64_t>& counts() const { return counts_; }
  const std::string& hash() const { return hash_; }

  void save_tsv(const std::string& path) const;
  static Vocabulary load_tsv(const std::string& path);

 private:
  std::vector<std::string> words_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> id_of_;
  std::string hash_;
};

struct EncodedReview {
  std::vector<int> ids;  // exactly L entries, trailing pads are id 0
  int label = 0;
};

struct EncodedDataset {
  std::vector<EncodedReview> reviews;
  std::string vocab_hash;
  std::string split_tag;  // train / val / test

  void save(const std::string& path) const;
  static EncodedDataset load(const std::string& path, const std::string& vocab_hash,
                             const std::string& split_tag);
};

inline constexpr int kSequenceLength = 250;
inline constexpr int kEmbeddingDim = 100;

// Reads <root>/pos/*.txt and <root>/neg/*.txt. Reviews from pos/ come first,
// each directory in lexicographic filename order. Non-UTF-8 files are skipped
// and counted in the report.
std::pair<std::vector<RawReview>, IngestReport> load_review_dir(const std::string& root_path);

std::vector<std::string> tokenize_and_filter(const std::string& text, const FilterRules& rules);

inline std::vector<std::string> tokenize_and_filter(const RawReview& review,
                                                    const FilterRules& rules) {
  return tokenize_and_filter(review.text, rules);
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int64_t min_count);

// Out-of-vocabulary tokens are dropped (removed, not mapped to 0); the first
// L surviving ids are kept and shorter sequences are right-padded with id 0.
std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                        int L = kSequenceLength);

std::vector<std::string> decode(const std::vector<int>& ids, const Vocabulary& vocab);

// Seeded shuffle split with a stratified re-draw when either side's label
// balance drifts more than 2 percentage points from the whole.
// |train| = floor(ratio * N) exactly.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(
    const std::vector<int>& labels, double ratio, uint64_t seed);

std::pair<EncodedDataset, EncodedDataset> split_train_val(
    const std::vector<EncodedReview>& dataset, const std::string& vocab_hash,
    double ratio, uint64_t seed);

Vocabulary prune_vocabulary(const Vocabulary& vocab,
                            const std::vector<std::string>& ranked_words,
                            double keep_fraction);

Vocabulary complement_vocabulary(const Vocabulary& vocab,
                                 const std::vector<std::string>& ranked_words,
                                 double drop_fraction);

}  // namespace textcnn
