#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textcnnlab/adam.hpp"
#include "textcnnlab/model.hpp"

namespace textcnn {

struct TrainConfig {
  int epochs = 5;
  double lr0 = 1e-3;
  double decay = 0.7;  // learning-rate multiplier per epoch
  int batch = 64;
  uint64_t seed = 1;
  bool shuffle_each_epoch = true;
  int workers = 1;           // batch items are split over workers; gradients
                             // reduce in a fixed order, so results depend only
                             // on (seed, workers), never on scheduling
  int trace_points = 20;     // accuracy samples per epoch
  int trace_eval_size = 256; // validation subset used for the trace (0 = full)
  bool log_epochs = false;   // one structured line per epoch on stderr

  void validate() const;
};

struct TracePoint {
  double epoch_fraction = 0.0;
  double train_acc = 0.0;  // running accuracy over the trailing trace window
  double val_acc = 0.0;
  double seconds_elapsed = 0.0;  // cumulative optimizer-loop time
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;  // wall clock around the optimizer loop only
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<TracePoint> trace;
  ParamCount params;
  double final_val_acc = 0.0;

  double average_epoch_seconds() const;
  void save_trace_csv(const std::string& path, const std::string& run_id) const;
  void save_summary_json(const std::string& path, const std::string& run_id) const;
};

// Trains in place. Deterministic for fixed (seed, workers): batches are drawn
// from a seeded shuffle and per-item gradients reduce in item order.
TrainReport train(SentimentCNN& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& cfg);

// Accuracy percentage at threshold 0.5; a prediction of exactly 0.5 counts as
// the positive class.
double evaluate(const SentimentCNN& model, const EncodedDataset& dataset, int workers = 1);

}  // namespace textcnn
