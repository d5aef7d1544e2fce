#include "textcnnlab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textcnnlab/util.hpp"

namespace fs = std::filesystem;

namespace textcnn {

namespace {

bool is_valid_utf8(const std::string& s) {
  size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const size_t n = s.size();
  while (i < n) {
    unsigned char c = p[i];
    size_t len;
    if (c < 0x80) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    else return false;
    if (i + len > n) return false;
    for (size_t k = 1; k < len; ++k)
      if ((p[i + k] & 0xC0) != 0x80) return false;
    if (len == 2 && c < 0xC2) return false;  // overlong
    i += len;
  }
  return true;
}

std::string read_whole_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> sorted_txt_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string vocab_identity_hash(const std::vector<std::string>& words,
                                const std::vector<int64_t>& counts) {
  Fnv1a h;
  h.update(static_cast<uint64_t>(words.size()));
  for (size_t i = 0; i < words.size(); ++i) {
    h.update(words[i]);
    h.update(static_cast<uint64_t>(counts[i]));
  }
  return h.hex();
}

}  // namespace

FilterRules FilterRules::load(const std::string& stopwords_path,
                              const std::string& dictionary_path) {
  FilterRules rules;
  auto load_set = [](const std::string& path, std::unordered_set<std::string>& out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open word list: " + path);
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (!line.empty()) out.insert(line);
    }
  };
  load_set(stopwords_path, rules.stopword_set);
  load_set(dictionary_path, rules.dictionary_set);
  return rules;
}

std::pair<std::vector<RawReview>, IngestReport> load_review_dir(const std::string& root_path) {
  const fs::path root(root_path);
  if (!fs::is_directory(root))
    throw std::runtime_error("review directory does not exist: " + root_path);

  IngestReport report;
  std::vector<RawReview> reviews;
  const std::pair<const char*, int> parts[] = {{"pos", 1}, {"neg", 0}};
  for (const auto& [sub, label] : parts) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir))
      throw std::runtime_error("missing labeled subdirectory: " + dir.string());
    for (const auto& path : sorted_txt_files(dir)) {
      ++report.files_seen;
      std::string text = read_whole_file(path);
      if (!is_valid_utf8(text)) {
        ++report.skipped_non_utf8;
        report.warnings.push_back("skipped non-UTF-8 file: " + path.string());
        continue;
      }
      if (text.empty()) {
        report.warnings.push_back("skipped empty file: " + path.string());
        continue;
      }
      reviews.push_back(RawReview{std::move(text), label, path.stem().string()});
    }
  }
  if (reviews.empty()) report.warnings.push_back("0 reviews ingested");
  return {std::move(reviews), std::move(report)};
}

std::vector<std::string> tokenize_and_filter(const std::string& text, const FilterRules& rules) {
  std::string cleaned;
  cleaned.reserve(text.size());
  if (rules.strip_html) {
    // delete maximal <...> substrings; an unterminated '<' drops the tail
    bool in_tag = false;
    for (char ch : text) {
      if (in_tag) {
        if (ch == '>') {
          in_tag = false;
          cleaned.push_back(' ');
        }
      } else if (ch == '<') {
        in_tag = true;
      } else {
        cleaned.push_back(ch);
      }
    }
  } else {
    cleaned = text;
  }

  std::vector<std::string> tokens;
  std::string cur;
  bool cur_has_digit = false;
  auto flush = [&]() {
    if (!cur.empty()) {
      if (!(rules.drop_numeric && cur_has_digit) &&
          rules.stopword_set.find(cur) == rules.stopword_set.end() &&
          (rules.dictionary_set.empty() ||
           rules.dictionary_set.find(cur) != rules.dictionary_set.end())) {
        tokens.push_back(cur);
      }
      cur.clear();
    }
    cur_has_digit = false;
  };
  for (unsigned char ch : cleaned) {
    const bool alpha = std::isalpha(ch) != 0;
    const bool digit = std::isdigit(ch) != 0;
    const bool keep = rules.drop_punct ? (alpha || digit) : (std::isspace(ch) == 0);
    if (keep) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
      cur_has_digit = cur_has_digit || digit;
    } else if (rules.drop_punct || std::isspace(ch) != 0) {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<int64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
  if (words_.size() != counts_.size())
    throw std::invalid_argument("vocabulary: words/counts size mismatch");
  id_of_.reserve(words_.size());
  for (size_t i = 0; i < words_.size(); ++i) {
    if (!id_of_.emplace(words_[i], static_cast<int>(i) + 1).second)
      throw std::invalid_argument("vocabulary: duplicate word " + words_[i]);
  }
  hash_ = vocab_identity_hash(words_, counts_);
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = id_of_.find(word);
  return it == id_of_.end() ? 0 : it->second;
}

const std::string& Vocabulary::word_of(int id) const {
  if (id < 1 || id > size()) throw std::out_of_range("vocabulary: id out of range");
  return words_[static_cast<size_t>(id) - 1];
}

int64_t Vocabulary::count_of(const std::string& word) const {
  const int id = id_of(word);
  return id == 0 ? 0 : counts_[static_cast<size_t>(id) - 1];
}

void Vocabulary::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  out << "#V=" << size() << "\n";
  for (int i = 0; i < size(); ++i)
    out << words_[static_cast<size_t>(i)] << "\t" << (i + 1) << "\t"
        << counts_[static_cast<size_t>(i)] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#V=", 0) != 0)
    throw std::runtime_error("vocabulary file missing #V= header: " + path);
  const int expected = std::stoi(line.substr(3));
  std::vector<std::string> words;
  std::vector<int64_t> counts;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    int id;
    int64_t count;
    if (!(ss >> word >> id >> count))
      throw std::runtime_error("malformed vocabulary line " + std::to_string(line_no) +
                               " in " + path);
    if (id != static_cast<int>(words.size()) + 1)
      throw std::runtime_error("vocabulary ids not dense at line " + std::to_string(line_no));
    words.push_back(word);
    counts.push_back(count);
  }
  if (static_cast<int>(words.size()) != expected)
    throw std::runtime_error("vocabulary count does not match header in " + path);
  return Vocabulary(std::move(words), std::move(counts));
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& list : token_lists)
    for (const auto& tok : list) ++freq[tok];
  if (freq.empty()) throw std::runtime_error("empty corpus");

  std::vector<std::pair<std::string, int64_t>> entries;
  entries.reserve(freq.size());
  for (auto& kv : freq)
    if (kv.second >= min_count) entries.emplace_back(kv.first, kv.second);
  if (entries.empty()) throw std::runtime_error("empty corpus");
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> words;
  std::vector<int64_t> counts;
  words.reserve(entries.size());
  counts.reserve(entries.size());
  for (auto& [w, c] : entries) {
    words.push_back(std::move(w));
    counts.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(counts));
}

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, int L) {
  if (L < 1) throw std::invalid_argument("encode: L must be >= 1");
  std::vector<int> ids;
  ids.reserve(static_cast<size_t>(L));
  for (const auto& tok : tokens) {
    if (static_cast<int>(ids.size()) == L) break;
    const int id = vocab.id_of(tok);
    if (id != 0) ids.push_back(id);
  }
  ids.resize(static_cast<size_t>(L), 0);
  return ids;
}

std::vector<std::string> decode(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  for (int id : ids)
    if (id != 0) tokens.push_back(vocab.word_of(id));
  return tokens;
}

void EncodedDataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const auto& r : reviews) {
    out << r.label << '\t';
    for (size_t i = 0; i < r.ids.size(); ++i) {
      if (i) out << ',';
      out << r.ids[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

EncodedDataset EncodedDataset::load(const std::string& path, const std::string& vocab_hash,
                                    const std::string& split_tag) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  EncodedDataset ds;
  ds.vocab_hash = vocab_hash;
  ds.split_tag = split_tag;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("malformed dataset line " + std::to_string(line_no));
    EncodedReview r;
    r.label = std::stoi(line.substr(0, tab));
    size_t pos = tab + 1;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      r.ids.push_back(std::stoi(line.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    ds.reviews.push_back(std::move(r));
  }
  return ds;
}

namespace {

double positive_share(const std::vector<int>& labels, const std::vector<size_t>& idx,
                      size_t begin, size_t end) {
  if (begin == end) return 0.0;
  size_t pos = 0;
  for (size_t i = begin; i < end; ++i) pos += static_cast<size_t>(labels[idx[i]] == 1);
  return static_cast<double>(pos) / static_cast<double>(end - begin);
}

}  // namespace

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(
    const std::vector<int>& labels, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split_train_val: ratio must be in (0, 1)");
  const size_t n = labels.size();
  if (n < 2) throw std::invalid_argument("split_train_val: need at least 2 reviews");
  const size_t n_train = static_cast<size_t>(ratio * static_cast<double>(n));

  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  const double whole = positive_share(labels, idx, 0, n);
  const double train_share = positive_share(labels, idx, 0, n_train);
  const double val_share = positive_share(labels, idx, n_train, n);
  if (std::abs(train_share - whole) > 0.02 || std::abs(val_share - whole) > 0.02) {
    // stratified re-draw: keep the shuffled order within each label and
    // interleave proportionally; the train block still has exactly n_train
    std::vector<size_t> pos_idx, neg_idx;
    for (size_t i : idx) (labels[i] == 1 ? pos_idx : neg_idx).push_back(i);
    const size_t train_pos =
        static_cast<size_t>(std::llround(whole * static_cast<double>(n_train)));
    const size_t train_neg = n_train - train_pos;
    if (train_pos > pos_idx.size() || train_neg > neg_idx.size())
      throw std::runtime_error("split_train_val: cannot stratify this label balance");
    std::vector<size_t> rebuilt;
    rebuilt.reserve(n);
    rebuilt.insert(rebuilt.end(), pos_idx.begin(), pos_idx.begin() + train_pos);
    rebuilt.insert(rebuilt.end(), neg_idx.begin(), neg_idx.begin() + train_neg);
    rebuilt.insert(rebuilt.end(), pos_idx.begin() + train_pos, pos_idx.end());
    rebuilt.insert(rebuilt.end(), neg_idx.begin() + train_neg, neg_idx.end());
    idx = std::move(rebuilt);
    std::vector<size_t> train_block(idx.begin(), idx.begin() + n_train);
    std::vector<size_t> val_block(idx.begin() + n_train, idx.end());
    rng.shuffle(train_block);
    rng.shuffle(val_block);
    std::copy(train_block.begin(), train_block.end(), idx.begin());
    std::copy(val_block.begin(), val_block.end(), idx.begin() + n_train);
  }

  return {std::vector<size_t>(idx.begin(), idx.begin() + n_train),
          std::vector<size_t>(idx.begin() + n_train, idx.end())};
}

std::pair<EncodedDataset, EncodedDataset> split_train_val(
    const std::vector<EncodedReview>& dataset, const std::string& vocab_hash,
    double ratio, uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& r : dataset) labels.push_back(r.label);
  const auto [train_idx, val_idx] = split_indices(labels, ratio, seed);

  EncodedDataset train, val;
  train.vocab_hash = val.vocab_hash = vocab_hash;
  train.split_tag = "train";
  val.split_tag = "val";
  train.reviews.reserve(train_idx.size());
  val.reviews.reserve(val_idx.size());
  for (size_t i : train_idx) train.reviews.push_back(dataset[i]);
  for (size_t i : val_idx) val.reviews.push_back(dataset[i]);
  return {std::move(train), std::move(val)};
}

namespace {

Vocabulary subset_vocabulary(const Vocabulary& vocab,
                             const std::vector<std::string>& ranked_words, size_t take,
                             bool keep_top) {
  if (ranked_words.size() != static_cast<size_t>(vocab.size()))
    throw std::invalid_argument("ranked_words is not a permutation of the vocabulary");
  std::unordered_set<std::string> seen;
  seen.reserve(ranked_words.size());
  for (const auto& w : ranked_words) {
    if (vocab.id_of(w) == 0 || !seen.insert(w).second)
      throw std::invalid_argument("ranked_words is not a permutation of the vocabulary");
  }
  std::vector<std::string> words;
  std::vector<int64_t> counts;
  const size_t begin = keep_top ? 0 : take;
  const size_t end = keep_top ? take : ranked_words.size();
  for (size_t i = begin; i < end; ++i) {
    words.push_back(ranked_words[i]);
    counts.push_back(vocab.count_of(ranked_words[i]));
  }
  if (words.empty()) throw std::runtime_error("empty vocabulary");
  return Vocabulary(std::move(words), std::move(counts));
}

}  // namespace

Vocabulary prune_vocabulary(const Vocabulary& vocab,
                            const std::vector<std::string>& ranked_words,
                            double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("prune_vocabulary: keep_fraction must be in (0, 1]");
  const auto take = static_cast<size_t>(ceil_fraction(vocab.size(), keep_fraction));
  return subset_vocabulary(vocab, ranked_words, take, true);
}

Vocabulary complement_vocabulary(const Vocabulary& vocab,
                                 const std::vector<std::string>& ranked_words,
                                 double drop_fraction) {
  if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0))
    throw std::invalid_argument("complement_vocabulary: drop_fraction must be in [0, 1]");
  const auto drop = static_cast<size_t>(ceil_fraction(vocab.size(), drop_fraction));
  return subset_vocabulary(vocab, ranked_words, drop, false);
}

}  // namespace textcnn
