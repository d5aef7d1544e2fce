#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace fs = std::filesystem;

namespace textcnn::testsupport {

std::string asset_path(const std::string& name) {
  for (const auto& base : {"assets", "../assets", "../../assets", "../../../assets"}) {
    const fs::path p = fs::path(base) / name;
    if (fs::exists(p)) return p.string();
  }
  throw std::runtime_error("cannot locate asset " + name + " from " +
                           fs::current_path().string());
}

std::vector<std::string> load_generator_lexicon(const std::string& dictionary_path,
                                                const std::string& stopwords_path,
                                                size_t cap) {
  std::unordered_set<std::string> stop;
  {
    std::ifstream in(stopwords_path);
    std::string w;
    while (in >> w) stop.insert(w);
  }
  std::ifstream in(dictionary_path);
  if (!in) throw std::runtime_error("cannot open dictionary: " + dictionary_path);
  std::vector<std::string> words;
  std::string w;
  // take an evenly spaced sample across the alphabet instead of the head
  std::vector<std::string> all;
  while (in >> w) {
    if (w.size() < 3 || w.size() > 12) continue;
    if (stop.count(w)) continue;
    all.push_back(w);
  }
  if (all.size() <= cap) return all;
  words.reserve(cap);
  const double step = static_cast<double>(all.size()) / static_cast<double>(cap);
  for (size_t i = 0; i < cap; ++i)
    words.push_back(all[static_cast<size_t>(i * step)]);
  return words;
}

namespace {

struct ZipfSampler {
  std::vector<double> cum;
  explicit ZipfSampler(size_t n, double exp) {
    cum.resize(n);
    double total = 0.0;
    for (size_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), exp);
      cum[r] = total;
    }
    for (auto& c : cum) c /= total;
  }
  size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  }
};

const char* kNegators[] = {"not", "never", "hardly", "barely", "scarcely"};

std::string render_tokens(const std::vector<std::string>& tokens, Rng& rng) {
  std::string text;
  for (size_t i = 0; i < tokens.size(); ++i) {
    std::string tok = tokens[i];
    const double u = rng.uniform();
    if (u < 0.08) tok[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
    text += tok;
    const double v = rng.uniform();
    if (v < 0.05) text += ",";
    else if (v < 0.08) text += ".";
    if (v > 0.985) text += " <br /> 8/10";
    if (i + 1 < tokens.size()) text += " ";
  }
  return text;
}

}  // namespace

SynthCorpus make_synth_corpus(const SynthSpec& spec, const std::vector<std::string>& lexicon) {
  const size_t need = static_cast<size_t>(spec.n_pos_words) + spec.n_neg_words +
                      spec.n_noise_words;
  if (lexicon.size() < need)
    throw std::runtime_error("lexicon too small for the requested corpus");

  Rng lexicon_rng(spec.lexicon_seed);
  Rng rng(spec.seed);
  std::vector<std::string> pool = lexicon;
  // negators must never appear as sentiment or noise words
  const std::unordered_set<std::string> negset(std::begin(kNegators), std::end(kNegators));
  pool.erase(std::remove_if(pool.begin(), pool.end(),
                            [&](const std::string& w) { return negset.count(w) > 0; }),
             pool.end());
  lexicon_rng.shuffle(pool);

  SynthCorpus corpus;
  size_t cursor = 0;
  for (int i = 0; i < spec.n_pos_words; ++i) corpus.pos_words.push_back(pool[cursor++]);
  for (int i = 0; i < spec.n_neg_words; ++i) corpus.neg_words.push_back(pool[cursor++]);
  std::vector<std::string> noise(pool.begin() + static_cast<ptrdiff_t>(cursor),
                                 pool.begin() + static_cast<ptrdiff_t>(cursor + spec.n_noise_words));

  const int G = spec.n_themes;
  // theme partition: word w belongs to theme (index mod G)
  auto theme_of = [G](size_t index) { return static_cast<int>(index % static_cast<size_t>(G)); };
  std::vector<std::vector<size_t>> noise_by_theme(static_cast<size_t>(G));
  for (size_t i = 0; i < noise.size(); ++i)
    noise_by_theme[static_cast<size_t>(theme_of(i))].push_back(i);
  std::vector<std::vector<size_t>> pos_by_theme(static_cast<size_t>(G)),
      neg_by_theme(static_cast<size_t>(G));
  for (size_t i = 0; i < corpus.pos_words.size(); ++i)
    pos_by_theme[static_cast<size_t>(theme_of(i))].push_back(i);
  for (size_t i = 0; i < corpus.neg_words.size(); ++i)
    neg_by_theme[static_cast<size_t>(theme_of(i))].push_back(i);

  std::vector<ZipfSampler> noise_samplers;
  noise_samplers.reserve(static_cast<size_t>(G));
  for (int g = 0; g < G; ++g)
    noise_samplers.emplace_back(noise_by_theme[static_cast<size_t>(g)].size(), spec.zipf_exp);

  const size_t n_negators = std::size(kNegators);
  auto gen_review = [&](int label) {
    const int theme = static_cast<int>(rng.index(static_cast<size_t>(G)));
    const int len = spec.len_min +
                    static_cast<int>(rng.index(static_cast<size_t>(spec.len_max - spec.len_min)));
    std::vector<std::string> tokens;
    tokens.reserve(static_cast<size_t>(len) + 8);
    while (static_cast<int>(tokens.size()) < len) {
      const int g = rng.uniform() < spec.theme_focus
                        ? theme
                        : static_cast<int>(rng.index(static_cast<size_t>(G)));
      if (rng.uniform() < spec.p_sentiment) {
        const int evidence = rng.uniform() < spec.p_flip ? 1 - label : label;
        const bool negated = rng.uniform() < spec.p_negation;
        const int word_class = negated ? 1 - evidence : evidence;
        const auto& by_theme = word_class == 1 ? pos_by_theme : neg_by_theme;
        const auto& words = word_class == 1 ? corpus.pos_words : corpus.neg_words;
        const auto& bucket = by_theme[static_cast<size_t>(g)];
        if (negated) {
          // order-sensitive evidence: "<negator> word" flips the word's
          // polarity, "word <negator>" leaves it alone. Both orders occur
          // equally often, so adjacency alone carries no signal.
          if (rng.uniform() < 0.5) {
            tokens.push_back(kNegators[rng.index(n_negators)]);
            tokens.push_back(words[bucket[rng.index(bucket.size())]]);
          } else {
            const auto& direct = evidence == 1 ? pos_by_theme : neg_by_theme;
            const auto& direct_words = evidence == 1 ? corpus.pos_words : corpus.neg_words;
            const auto& db = direct[static_cast<size_t>(g)];
            tokens.push_back(direct_words[db[rng.index(db.size())]]);
            tokens.push_back(kNegators[rng.index(n_negators)]);
          }
        } else {
          // sentiment clumps: short same-class bursts give skip-gram a
          // class axis through direct co-occurrence
          int burst = 1;
          while (burst < 3 && rng.uniform() < spec.burst_continue) ++burst;
          for (int b = 0; b < burst; ++b)
            tokens.push_back(words[bucket[rng.index(bucket.size())]]);
        }
      } else {
        const auto& bucket = noise_by_theme[static_cast<size_t>(g)];
        tokens.push_back(noise[bucket[noise_samplers[static_cast<size_t>(g)].sample(rng)]]);
      }
    }
    return render_tokens(tokens, rng);
  };

  const size_t per_class = spec.n_reviews / 2;
  corpus.pos_texts.reserve(per_class);
  corpus.neg_texts.reserve(per_class);
  for (size_t i = 0; i < per_class; ++i) corpus.pos_texts.push_back(gen_review(1));
  for (size_t i = 0; i < spec.n_reviews - per_class; ++i)
    corpus.neg_texts.push_back(gen_review(0));
  return corpus;
}

void write_review_tree(const std::string& root, const SynthCorpus& corpus) {
  const fs::path base(root);
  fs::create_directories(base / "pos");
  fs::create_directories(base / "neg");
  auto write_all = [&](const std::vector<std::string>& texts, const char* sub) {
    for (size_t i = 0; i < texts.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "r%05zu.txt", i);
      std::ofstream out(base / sub / name, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write synthetic review");
      out << texts[i] << "\n";
    }
  };
  write_all(corpus.pos_texts, "pos");
  write_all(corpus.neg_texts, "neg");
}

}  // namespace textcnn::testsupport
