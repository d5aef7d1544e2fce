#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "textcnnlab/interpret.hpp"
#include "textcnnlab/train.hpp"

namespace textcnn {

struct ExperimentPlan {
  std::string study;  // shuffle | cluster_sweep | prune_sweep | baseline_suite
  std::vector<uint64_t> seeds = {1};

  std::string data_dir;      // preprocessed corpus: vocab.tsv, train.tsv, val.tsv, test.tsv
  std::string raw_train_root;  // raw pos/neg tree; studies that re-encode need it
  std::string raw_test_root;
  std::string stopwords_path;
  std::string dictionary_path;
  std::string embeddings_path;  // word vectors for the basic model
  std::string checkpoint_dir;   // trained basic model; trained on demand when absent

  TrainConfig train_cfg;
  double split_ratio = 0.9;
  uint64_t split_seed = 1;

  std::string output_dir = "reports";
  std::string stamp;  // report subdirectory name; UTC timestamp when empty

  std::vector<int> ks = {1, 5, 10, 20, 100, 200, 500, 1000, 2000};
  std::vector<double> fractions = {1.0, 0.8, 0.5, 0.1, 0.05, 0.01, 0.005};
  double keep_fraction = 0.05;  // the "important words" fraction
  bool serial_timing = true;

  void validate() const;
};

// Raw study results; the CSV/TSV renderings are derived from `raw` alone so
// reports can be regenerated without retraining.
struct StudyReport {
  std::string study;
  nlohmann::json raw;
};

// Preprocessed corpus bundle used by the studies.
struct CorpusBundle {
  Vocabulary vocab;
  EncodedDataset train, val, test;
};

CorpusBundle load_preprocessed(const std::string& data_dir);

// Loads the basic-model checkpoint when present and compatible, otherwise
// trains one (frozen word2vec embeddings) and saves it to plan.checkpoint_dir.
SentimentCNN obtain_basic_model(const ExperimentPlan& plan, const CorpusBundle& data,
                                const EmbeddingMatrix& emb);

EmbeddingMatrix embedding_from_model(const SentimentCNN& model);

StudyReport run_shuffle_suite(const ExperimentPlan& plan);
StudyReport run_cluster_sweep(const ExperimentPlan& plan);
StudyReport run_prune_sweep(const ExperimentPlan& plan);
StudyReport run_baseline_suite(const ExperimentPlan& plan);

// Renders one file set under <dir> (created if needed); returns the paths.
std::vector<std::string> write_reports(const StudyReport& report, const std::string& dir);

// Convenience: <output_dir>/<short study name>/<stamp>
std::string report_dir_for(const ExperimentPlan& plan, const std::string& study);

StudyReport load_raw_report(const std::string& path);

}  // namespace textcnn
