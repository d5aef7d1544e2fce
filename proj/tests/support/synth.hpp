#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textcnnlab/util.hpp"

namespace textcnn::testsupport {

// Synthetic review generator. Reviews mix label-bearing sentiment words
// (sometimes under a negator, which flips the polarity of the following
// word), themed noise words with a Zipfian profile, and light HTML/number/
// punctuation debris for the tokenizer to remove. Written so that first-layer
// filters matter: unigram evidence is noisy, negation bigrams carry the rest.
struct SynthSpec {
  size_t n_reviews = 5000;  // total, balanced
  uint64_t seed = 7;          // review sampling stream
  uint64_t lexicon_seed = 1;  // word-pool assignment; share across train/test
  int n_pos_words = 150;
  int n_neg_words = 150;
  int n_noise_words = 20000;
  int n_themes = 6;
  double p_sentiment = 0.18;  // per-position probability of a sentiment event
  double p_flip = 0.12;       // sentiment evidence contradicting the label
  double p_negation = 0.28;   // sentiment events rendered as "<negator> <word>"
  double burst_continue = 0.55;  // chance a sentiment burst keeps going (max 3)
  double theme_focus = 0.7;   // share of tokens drawn from the review's theme
  double zipf_exp = 1.05;
  int len_min = 40;
  int len_max = 200;
};

struct SynthCorpus {
  std::vector<std::string> pos_texts;
  std::vector<std::string> neg_texts;
  std::vector<std::string> pos_words;  // the generating sentiment lexicon
  std::vector<std::string> neg_words;
};

// Words of length 3..12 from a one-word-per-line file, minus the given
// stopwords, in deterministic order.
std::vector<std::string> load_generator_lexicon(const std::string& dictionary_path,
                                                const std::string& stopwords_path,
                                                size_t cap);

SynthCorpus make_synth_corpus(const SynthSpec& spec, const std::vector<std::string>& lexicon);

// Writes <root>/pos/rNNNNN.txt and <root>/neg/rNNNNN.txt.
void write_review_tree(const std::string& root, const SynthCorpus& corpus);

// Locates the repo assets directory from the test working directory.
std::string asset_path(const std::string& name);

}  // namespace textcnn::testsupport
