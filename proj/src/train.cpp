#include "textcnnlab/train.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "textcnnlab/util.hpp"

using nlohmann::json;

namespace textcnn {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!(lr0 > 0)) throw std::invalid_argument("train: lr0 must be > 0");
  if (!(decay > 0 && decay <= 1)) throw std::invalid_argument("train: decay must be in (0, 1]");
  if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (workers < 1) throw std::invalid_argument("train: workers must be >= 1");
  if (trace_points < 1) throw std::invalid_argument("train: trace_points must be >= 1");
}

double TrainReport::average_epoch_seconds() const {
  if (epochs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : epochs) s += e.seconds;
  return s / static_cast<double>(epochs.size());
}

void TrainReport::save_trace_csv(const std::string& path, const std::string& run_id) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace: " + path);
  out << "run_id,epoch_fraction,train_acc,val_acc,seconds_elapsed\n";
  for (const auto& p : trace) {
    out << run_id << "," << format_fixed(p.epoch_fraction, 4) << ","
        << format_fixed(p.train_acc, 4) << "," << format_fixed(p.val_acc, 4) << ","
        << format_fixed(p.seconds_elapsed, 4) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void TrainReport::save_summary_json(const std::string& path, const std::string& run_id) const {
  json j;
  j["run_id"] = run_id;
  j["final_val_acc"] = final_val_acc;
  j["average_epoch_seconds"] = average_epoch_seconds();
  j["params"] = {{"total", params.total},
                 {"trainable", params.trainable},
                 {"frozen", params.frozen}};
  json epochs_json = json::array();
  for (const auto& e : epochs)
    epochs_json.push_back(json{{"train_loss", e.train_loss},
                               {"train_acc", e.train_acc},
                               {"val_acc", e.val_acc},
                               {"seconds", e.seconds}});
  j["epochs"] = epochs_json;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary: " + path);
  out << j.dump(2) << "\n";
}

double evaluate(const SentimentCNN& model, const EncodedDataset& dataset, int workers) {
  if (dataset.reviews.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const auto probs = forward(model, dataset.reviews, workers);
  int64_t correct = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const int pred = probs[i] >= 0.5f ? 1 : 0;  // 0.5 counts as positive
    correct += pred == dataset.reviews[i].label ? 1 : 0;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(probs.size());
}

namespace {

struct WorkerAccum {
  ModelGrads<float> grads;
  // per-item losses/hits, merged in batch order by the owner thread
  std::vector<float> loss;
  std::vector<uint8_t> hit;
};

double evaluate_subset(const SentimentCNN& model, const EncodedDataset& val,
                       const std::vector<size_t>& subset, int workers) {
  if (subset.empty()) return 0.0;
  std::vector<EncodedReview> batch;
  batch.reserve(subset.size());
  for (size_t i : subset) batch.push_back(val.reviews[i]);
  const auto probs = forward(model, batch, workers);
  int64_t correct = 0;
  for (size_t i = 0; i < probs.size(); ++i)
    correct += (probs[i] >= 0.5f ? 1 : 0) == batch[i].label ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(probs.size());
}

}  // namespace

TrainReport train(SentimentCNN& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.reviews.empty()) throw std::invalid_argument("train: empty training set");
  if (val_set.reviews.empty()) throw std::invalid_argument("train: empty validation set");
  if (!train_set.vocab_hash.empty() && !model.vocab_hash.empty() &&
      train_set.vocab_hash != model.vocab_hash)
    throw std::invalid_argument("train: dataset vocabulary does not match the model");

  const size_t n = train_set.reviews.size();
  const int workers = std::max(1, cfg.workers);

  // optimizer bindings: frozen layers are not bound; embedding binds past row
  // 0 so the pad row can never move
  ModelGrads<float> grads = make_grads(model);
  std::vector<nn::ParamBinding<float>> bindings;
  if (model.emb_trainable) {
    const size_t off = static_cast<size_t>(model.dims.emb_dim);
    bindings.push_back({model.embedding.ptr() + off, grads.embedding.ptr() + off,
                        model.embedding.data.size() - off, "embedding"});
  }
  if (model.conv1_trainable) {
    bindings.push_back({model.conv1.weights.ptr(), grads.conv1_w.ptr(),
                        model.conv1.weights.data.size(), "conv1.w"});
    bindings.push_back(
        {model.conv1.bias.ptr(), grads.conv1_b.ptr(), model.conv1.bias.data.size(), "conv1.b"});
  }
  bindings.push_back({model.conv2.weights.ptr(), grads.conv2_w.ptr(),
                      model.conv2.weights.data.size(), "conv2.w"});
  bindings.push_back(
      {model.conv2.bias.ptr(), grads.conv2_b.ptr(), model.conv2.bias.data.size(), "conv2.b"});
  bindings.push_back({model.dense.weights.ptr(), grads.dense_w.ptr(),
                      model.dense.weights.data.size(), "dense.w"});
  bindings.push_back(
      {model.dense.bias.ptr(), grads.dense_b.ptr(), model.dense.bias.data.size(), "dense.b"});
  bindings.push_back(
      {model.out.weights.ptr(), grads.out_w.ptr(), model.out.weights.data.size(), "out.w"});
  bindings.push_back(
      {model.out.bias.ptr(), grads.out_b.ptr(), model.out.bias.data.size(), "out.b"});

  nn::AdamState<float> adam(nn::AdamConfig{cfg.lr0, cfg.decay, 0.9, 0.999, 1e-8});
  adam.bind(bindings);

  std::vector<WorkerAccum> accums(static_cast<size_t>(workers));
  for (auto& a : accums) a.grads = make_grads(model);

  // fixed validation subset for the fractional-epoch trace
  std::vector<size_t> trace_subset;
  {
    const size_t want = cfg.trace_eval_size == 0
                            ? val_set.reviews.size()
                            : std::min<size_t>(val_set.reviews.size(),
                                               static_cast<size_t>(cfg.trace_eval_size));
    std::vector<size_t> all(val_set.reviews.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng trace_rng(cfg.seed ^ 0x7ace5eedull);
    trace_rng.shuffle(all);
    trace_subset.assign(all.begin(), all.begin() + static_cast<ptrdiff_t>(want));
  }

  TrainReport report;
  report.params = count_params(model);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(cfg.seed);

  double seconds_elapsed = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch || epoch == 0) shuffle_rng.shuffle(order);
    adam.set_epoch(epoch);

    const size_t num_batches = (n + static_cast<size_t>(cfg.batch) - 1) / cfg.batch;
    double epoch_loss = 0.0;
    int64_t epoch_hits = 0;
    int64_t window_hits = 0, window_total = 0;
    size_t traces_emitted = 0;
    double epoch_seconds = 0.0;

    for (size_t b = 0; b < num_batches; ++b) {
      const size_t begin = b * static_cast<size_t>(cfg.batch);
      const size_t end = std::min(n, begin + static_cast<size_t>(cfg.batch));
      const size_t batch_n = end - begin;

      const auto t0 = std::chrono::steady_clock::now();

      auto run_worker = [&](int w) {
        auto& acc = accums[static_cast<size_t>(w)];
        zero_grads(acc.grads);
        acc.loss.clear();
        acc.hit.clear();
        ForwardTrace<float> trace;
        const size_t per = (batch_n + static_cast<size_t>(workers) - 1) / workers;
        const size_t wb = std::min(batch_n, static_cast<size_t>(w) * per);
        const size_t we = std::min(batch_n, wb + per);
        for (size_t i = wb; i < we; ++i) {
          const auto& review = train_set.reviews[order[begin + i]];
          const float prob = forward_item(model, review.ids, trace);
          const float loss = backward_item(model, review.ids, review.label, trace, acc.grads);
          acc.loss.push_back(loss);
          acc.hit.push_back((prob >= 0.5f ? 1 : 0) == review.label ? 1 : 0);
        }
      };

      if (workers == 1) {
        run_worker(0);
      } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) threads.emplace_back(run_worker, w);
        for (auto& t : threads) t.join();
      }

      // ordered reduction: worker 0 buffer becomes the batch gradient
      zero_grads(grads);
      double batch_loss = 0.0;
      for (int w = 0; w < workers; ++w) {
        const auto& acc = accums[static_cast<size_t>(w)];
        accumulate_grads(grads, acc.grads);
        for (float l : acc.loss) batch_loss += l;
        for (uint8_t h : acc.hit) {
          epoch_hits += h;
          window_hits += h;
        }
        window_total += static_cast<int64_t>(acc.loss.size());
      }
      // mean gradient over the batch
      const float inv = 1.0f / static_cast<float>(batch_n);
      auto scale = [&](Tensor<float>& t) {
        for (auto& v : t.data) v *= inv;
      };
      scale(grads.embedding);
      scale(grads.conv1_w);
      scale(grads.conv1_b);
      scale(grads.conv2_w);
      scale(grads.conv2_b);
      scale(grads.dense_w);
      scale(grads.dense_b);
      scale(grads.out_w);
      scale(grads.out_b);
      adam.step();

      epoch_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      epoch_loss += batch_loss;

      // emit all trace checkpoints owed after this batch (exactly
      // trace_points per epoch, even when there are fewer batches)
      const size_t owed =
          (b + 1) * static_cast<size_t>(cfg.trace_points) / num_batches;
      while (traces_emitted < owed) {
        ++traces_emitted;
        TracePoint tp;
        tp.epoch_fraction = epoch + static_cast<double>(traces_emitted) / cfg.trace_points;
        tp.train_acc =
            window_total > 0 ? 100.0 * static_cast<double>(window_hits) / window_total
            : report.trace.empty() ? 0.0
                                   : report.trace.back().train_acc;
        tp.val_acc = evaluate_subset(model, val_set, trace_subset, workers);
        tp.seconds_elapsed = seconds_elapsed + epoch_seconds;
        report.trace.push_back(tp);
        window_hits = 0;
        window_total = 0;
      }
    }

    seconds_elapsed += epoch_seconds;
    EpochStats es;
    es.train_loss = epoch_loss / static_cast<double>(n);
    es.train_acc = 100.0 * static_cast<double>(epoch_hits) / static_cast<double>(n);
    es.val_acc = evaluate(model, val_set, workers);
    es.seconds = epoch_seconds;
    report.epochs.push_back(es);
    if (cfg.log_epochs) {
      std::cerr << "[train] epoch=" << (epoch + 1) << "/" << cfg.epochs
                << " train_loss=" << format_fixed(es.train_loss, 4)
                << " train_acc=" << format_fixed(es.train_acc, 2)
                << " val_acc=" << format_fixed(es.val_acc, 2)
                << " seconds=" << format_fixed(es.seconds, 2) << "\n";
    }
  }

  report.final_val_acc = report.epochs.back().val_acc;
  return report;
}

}  // namespace textcnn
