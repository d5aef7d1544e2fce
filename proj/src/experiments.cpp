#include "textcnnlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "textcnnlab/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textcnn {

namespace {

constexpr uint64_t kSaltWithin = 0x5175ffb2d1ull;
constexpr uint64_t kSaltAcross = 0xac0552f417ull;
constexpr uint64_t kSaltRandom = 0x9a4d03771bull;
constexpr uint64_t kSaltSample = 0x5a3b1e9cd5ull;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string now_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

json env_json(const ExperimentPlan& plan) {
  json env;
  env["precision"] = "float32";
  env["seeds"] = plan.seeds;
  env["workers"] = plan.train_cfg.workers;
  env["serial_timing"] = plan.serial_timing;
  env["split_seed"] = plan.split_seed;
  env["split_ratio"] = plan.split_ratio;
  env["hardware_threads"] = std::thread::hardware_concurrency();
  env["timing_note"] = "wall-clock around the optimizer loop only";
  return env;
}

void log_condition(const std::string& study, const std::string& condition, uint64_t seed,
                   double train_acc, double test_acc, double epoch_seconds) {
  std::cerr << "[" << study << "] condition=" << condition << " seed=" << seed
            << " train_acc=" << format_fixed(train_acc, 2)
            << " test_acc=" << format_fixed(test_acc, 2)
            << " avg_epoch_seconds=" << format_fixed(epoch_seconds, 3) << "\n";
}

struct TokenizedCorpus {
  std::vector<std::vector<std::string>> tokens;
  std::vector<int> labels;
};

TokenizedCorpus tokenize_root(const std::string& root, const FilterRules& rules) {
  auto [reviews, report] = load_review_dir(root);
  for (const auto& w : report.warnings) std::cerr << "[ingest] " << w << "\n";
  TokenizedCorpus out;
  out.tokens.reserve(reviews.size());
  out.labels.reserve(reviews.size());
  for (const auto& r : reviews) {
    out.tokens.push_back(tokenize_and_filter(r, rules));
    out.labels.push_back(r.label);
  }
  return out;
}

std::vector<EncodedReview> encode_corpus(const TokenizedCorpus& corpus, const Vocabulary& vocab) {
  std::vector<EncodedReview> encoded;
  encoded.reserve(corpus.tokens.size());
  for (size_t i = 0; i < corpus.tokens.size(); ++i)
    encoded.push_back(EncodedReview{encode(corpus.tokens[i], vocab), corpus.labels[i]});
  return encoded;
}

struct EncodedBundle {
  EncodedDataset train, val, test;
};

EncodedBundle encode_and_split(const TokenizedCorpus& train_corpus,
                               const TokenizedCorpus& test_corpus, const Vocabulary& vocab,
                               double ratio, uint64_t split_seed) {
  EncodedBundle b;
  auto [tr, va] = split_train_val(encode_corpus(train_corpus, vocab), vocab.hash(), ratio,
                                  split_seed);
  b.train = std::move(tr);
  b.val = std::move(va);
  b.test.reviews = encode_corpus(test_corpus, vocab);
  b.test.vocab_hash = vocab.hash();
  b.test.split_tag = "test";
  return b;
}

json trace_to_json(const std::vector<TracePoint>& trace) {
  json arr = json::array();
  for (const auto& p : trace)
    arr.push_back(json::array(
        {p.epoch_fraction, p.train_acc, p.val_acc, p.seconds_elapsed}));
  return arr;
}

struct ConditionOutcome {
  double train_acc = 0.0;
  double test_acc = 0.0;
  double avg_epoch_seconds = 0.0;
  int64_t param_total = 0;
  json trace;
};

ConditionOutcome train_and_score(SentimentCNN& model, const EncodedDataset& train_set,
                                 const EncodedDataset& val_set, const EncodedDataset& test_set,
                                 const TrainConfig& cfg) {
  const TrainReport rep = train(model, train_set, val_set, cfg);
  ConditionOutcome out;
  out.train_acc = rep.epochs.back().train_acc;
  out.test_acc = evaluate(model, test_set, cfg.workers);
  out.avg_epoch_seconds = rep.average_epoch_seconds();
  out.param_total = rep.params.total;
  out.trace = trace_to_json(rep.trace);
  return out;
}

FilterRules load_rules(const ExperimentPlan& plan) {
  return FilterRules::load(plan.stopwords_path, plan.dictionary_path);
}

}  // namespace

void ExperimentPlan::validate() const {
  if (seeds.empty()) throw std::invalid_argument("experiment plan needs at least one seed");
  if (data_dir.empty()) throw std::invalid_argument("experiment plan needs a data directory");
}

CorpusBundle load_preprocessed(const std::string& data_dir) {
  const fs::path dir(data_dir);
  CorpusBundle b;
  b.vocab = Vocabulary::load_tsv((dir / "vocab.tsv").string());
  const std::string h = b.vocab.hash();
  b.train = EncodedDataset::load((dir / "train.tsv").string(), h, "train");
  b.val = EncodedDataset::load((dir / "val.tsv").string(), h, "val");
  const fs::path test_path = dir / "test.tsv";
  if (fs::exists(test_path)) b.test = EncodedDataset::load(test_path.string(), h, "test");
  return b;
}

EmbeddingMatrix embedding_from_model(const SentimentCNN& model) {
  EmbeddingMatrix emb(model.vocab_size, model.dims.emb_dim, model.vocab_hash);
  emb.rows = model.embedding.data;
  return emb;
}

SentimentCNN obtain_basic_model(const ExperimentPlan& plan, const CorpusBundle& data,
                                const EmbeddingMatrix& emb) {
  if (!plan.checkpoint_dir.empty() &&
      fs::exists(fs::path(plan.checkpoint_dir) / "manifest.json")) {
    SentimentCNN m = load_checkpoint(plan.checkpoint_dir, data.vocab.hash());
    std::cerr << "[basic] loaded checkpoint from " << plan.checkpoint_dir << "\n";
    return m;
  }
  TrainConfig cfg = plan.train_cfg;
  cfg.seed = plan.seeds.front();
  SentimentCNN model = build_model(data.vocab.size(), emb, false, cfg.seed);
  const TrainReport rep = train(model, data.train, data.val, cfg);
  std::cerr << "[basic] trained basic model: val_acc="
            << format_fixed(rep.final_val_acc, 2) << "\n";
  if (!plan.checkpoint_dir.empty()) save_checkpoint(model, plan.checkpoint_dir);
  return model;
}

// ---------------------------------------------------------------------------
// Shuffle study
// ---------------------------------------------------------------------------

StudyReport run_shuffle_suite(const ExperimentPlan& plan) {
  plan.validate();
  const CorpusBundle data = load_preprocessed(plan.data_dir);
  const EmbeddingMatrix emb = load_word_vectors(plan.embeddings_path, data.vocab);
  if (data.test.reviews.empty())
    throw std::runtime_error("shuffle suite needs a test split in " + plan.data_dir);

  const std::vector<std::string> conditions = {"basic", "shuffle_within", "shuffle_across",
                                               "random_frozen"};
  json per_seed = json::array();
  std::map<std::string, std::vector<double>> test_accs, train_accs;
  json traces;

  for (size_t si = 0; si < plan.seeds.size(); ++si) {
    const uint64_t seed = plan.seeds[si];
    TrainConfig cfg = plan.train_cfg;
    cfg.seed = seed;

    // basic: first-layer trainable, embeddings frozen
    SentimentCNN basic = build_model(data.vocab.size(), emb, false, seed);
    const ConditionOutcome basic_out =
        train_and_score(basic, data.train, data.val, data.test, cfg);
    log_condition("shuffle", "basic", seed, basic_out.train_acc, basic_out.test_acc,
                  basic_out.avg_epoch_seconds);
    if (si == 0 && !plan.checkpoint_dir.empty() &&
        !fs::exists(fs::path(plan.checkpoint_dir) / "manifest.json")) {
      save_checkpoint(basic, plan.checkpoint_dir);
    }

    // the three manipulated first layers derive from this seed's basic model
    const auto& trained_conv1 = basic.conv1;
    std::map<std::string, nn::Conv1dParams<float>> variants;
    variants["shuffle_within"] = shuffle_within_filters(trained_conv1, seed ^ kSaltWithin);
    variants["shuffle_across"] = shuffle_across_filters(trained_conv1, seed ^ kSaltAcross);
    variants["random_frozen"] = randomize_first_layer(trained_conv1, seed ^ kSaltRandom);

    json seed_results;
    seed_results["basic"] = {{"train_acc", basic_out.train_acc},
                             {"test_acc", basic_out.test_acc},
                             {"avg_epoch_seconds", basic_out.avg_epoch_seconds}};
    test_accs["basic"].push_back(basic_out.test_acc);
    train_accs["basic"].push_back(basic_out.train_acc);
    if (si == 0) traces["basic"] = basic_out.trace;

    for (const auto& name : {std::string("shuffle_within"), std::string("shuffle_across"),
                             std::string("random_frozen")}) {
      SentimentCNN m = build_model(data.vocab.size(), emb, false, seed);
      m.conv1 = variants.at(name);
      m.conv1_trainable = false;
      const ConditionOutcome out = train_and_score(m, data.train, data.val, data.test, cfg);
      log_condition("shuffle", name, seed, out.train_acc, out.test_acc,
                    out.avg_epoch_seconds);
      seed_results[name] = {{"train_acc", out.train_acc},
                            {"test_acc", out.test_acc},
                            {"avg_epoch_seconds", out.avg_epoch_seconds}};
      test_accs[name].push_back(out.test_acc);
      train_accs[name].push_back(out.train_acc);
      if (si == 0) traces[name] = out.trace;
    }
    per_seed.push_back(json{{"seed", seed}, {"results", seed_results}});
  }

  json rows = json::array();
  for (size_t i = 0; i < conditions.size(); ++i) {
    const auto& c = conditions[i];
    json row;
    row["condition"] = c;
    row["train_acc"] = median(train_accs[c]);
    row["test_acc"] = median(test_accs[c]);
    rows.push_back(row);
  }
  // accuracy improvement: this row's test accuracy minus the next row's;
  // the last row compares against 50% chance
  for (size_t i = 0; i < conditions.size(); ++i) {
    const double mine = rows[i]["test_acc"];
    const double next = i + 1 < conditions.size()
                            ? static_cast<double>(rows[i + 1]["test_acc"])
                            : 50.0;
    rows[i]["improvement"] = mine - next;
  }

  StudyReport report;
  report.study = "shuffle";
  report.raw = json{{"study", "shuffle"},
                    {"env", env_json(plan)},
                    {"conditions", conditions},
                    {"per_seed", per_seed},
                    {"rows", rows},
                    {"traces", traces}};
  return report;
}

// ---------------------------------------------------------------------------
// Cluster sweep
// ---------------------------------------------------------------------------

StudyReport run_cluster_sweep(const ExperimentPlan& plan) {
  plan.validate();
  const CorpusBundle data = load_preprocessed(plan.data_dir);
  const EmbeddingMatrix emb = load_word_vectors(plan.embeddings_path, data.vocab);
  const SentimentCNN basic = obtain_basic_model(plan, data, emb);

  const std::vector<float> rows = concat_words_and_filters(emb, basic.conv1);
  const int64_t n_words = data.vocab.size();
  const int64_t n_filters = static_cast<int64_t>(basic.conv1.filters) * basic.conv1.width;
  const int64_t n = n_words + n_filters;

  json row_json = json::array();
  for (int k : plan.ks) {
    const Clustering cl =
        kmeans(rows, n, emb.dim, k, plan.seeds.front() ^ (static_cast<uint64_t>(k) * 0x9e37ull));
    const ClusterReportRow row = cluster_report(cl, n_words, n_filters);
    std::cerr << "[cluster] k=" << k << " sse=" << format_fixed(row.sse, 1)
              << " top_word_count=" << row.top_word_count << " ("
              << format_fixed(row.top_word_percent, 2) << "%) filter_fraction="
              << format_fixed(row.filter_fraction, 3) << "\n";
    json jr;
    jr["k"] = row.k;
    jr["sse"] = row.sse;
    jr["top_word_count"] = row.top_word_count;
    jr["top_word_percent"] = row.top_word_percent;
    jr["filter_fraction"] = row.filter_fraction;
    jr["sizes_sum"] = std::accumulate(cl.sizes.begin(), cl.sizes.end(), int64_t{0});
    jr["sse_trace"] = cl.sse_trace;
    row_json.push_back(jr);
  }

  // Figure 2 data: 2-D projection of words and filter slices
  const Projection2D proj = pca2(rows, n, emb.dim);
  std::vector<std::string> label_types, labels;
  label_types.reserve(static_cast<size_t>(n));
  labels.reserve(static_cast<size_t>(n));
  for (int id = 1; id <= data.vocab.size(); ++id) {
    label_types.push_back("word");
    labels.push_back(data.vocab.word_of(id));
  }
  for (int f = 0; f < basic.conv1.filters; ++f)
    for (int s = 0; s < basic.conv1.width; ++s) {
      label_types.push_back("filter");
      labels.push_back("f" + std::to_string(f) + "_s" + std::to_string(s));
    }
  json proj_json;
  proj_json["label_types"] = label_types;
  proj_json["labels"] = labels;
  proj_json["coords"] = proj.coords;

  StudyReport report;
  report.study = "cluster";
  report.raw = json{{"study", "cluster"},
                    {"env", env_json(plan)},
                    {"word_count", n_words},
                    {"filter_rows", n_filters},
                    {"rows", row_json},
                    {"projection", proj_json}};
  return report;
}

// ---------------------------------------------------------------------------
// Prune sweep
// ---------------------------------------------------------------------------

StudyReport run_prune_sweep(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.raw_train_root.empty() || plan.raw_test_root.empty())
    throw std::invalid_argument("prune sweep needs raw train/test roots for re-encoding");
  const CorpusBundle data = load_preprocessed(plan.data_dir);
  const EmbeddingMatrix emb = load_word_vectors(plan.embeddings_path, data.vocab);
  const SentimentCNN basic = obtain_basic_model(plan, data, emb);

  const ImportanceTable importance = word_importance_fast(emb, basic.conv1);
  const std::vector<std::string> ranked = rank_words(importance, data.vocab, 1.0);

  const FilterRules rules = load_rules(plan);
  const TokenizedCorpus train_corpus = tokenize_root(plan.raw_train_root, rules);
  const TokenizedCorpus test_corpus = tokenize_root(plan.raw_test_root, rules);

  json per_seed = json::array();
  std::map<double, std::vector<double>> test_accs, train_accs;
  std::map<double, int64_t> word_counts;

  for (uint64_t seed : plan.seeds) {
    TrainConfig cfg = plan.train_cfg;
    cfg.seed = seed;
    json seed_results = json::array();
    for (double fraction : plan.fractions) {
      const Vocabulary pruned = fraction >= 1.0
                                    ? data.vocab
                                    : prune_vocabulary(data.vocab, ranked, fraction);
      word_counts[fraction] = pruned.size();
      const EncodedBundle enc =
          encode_and_split(train_corpus, test_corpus, pruned, plan.split_ratio, plan.split_seed);
      SentimentCNN model =
          build_model(pruned.size(), random_embedding(pruned, seed), true, seed);
      const ConditionOutcome out = train_and_score(model, enc.train, enc.val, enc.test, cfg);
      log_condition("prune", "keep_" + format_fixed(fraction * 100.0, 1) + "pct", seed,
                    out.train_acc, out.test_acc, out.avg_epoch_seconds);
      seed_results.push_back(json{{"fraction", fraction},
                                  {"word_count", pruned.size()},
                                  {"train_acc", out.train_acc},
                                  {"test_acc", out.test_acc},
                                  {"avg_epoch_seconds", out.avg_epoch_seconds}});
      test_accs[fraction].push_back(out.test_acc);
      train_accs[fraction].push_back(out.train_acc);
    }
    per_seed.push_back(json{{"seed", seed}, {"results", seed_results}});
  }

  json rows = json::array();
  for (double fraction : plan.fractions) {
    rows.push_back(json{{"fraction", fraction},
                        {"word_count", word_counts[fraction]},
                        {"train_acc", median(train_accs[fraction])},
                        {"test_acc", median(test_accs[fraction])}});
  }

  // Figures 3-4 data: word projection with the important words marked
  const Projection2D proj = pca2(
      std::vector<float>(emb.rows.begin() + emb.dim, emb.rows.end()), data.vocab.size(),
      emb.dim);
  const auto top_words = rank_words(importance, data.vocab, plan.keep_fraction);
  const std::unordered_set<std::string> top_set(top_words.begin(), top_words.end());
  std::vector<std::string> label_types, labels;
  for (int id = 1; id <= data.vocab.size(); ++id) {
    const std::string& w = data.vocab.word_of(id);
    label_types.push_back(top_set.count(w) ? "top_word" : "word");
    labels.push_back(w);
  }
  json proj_json;
  proj_json["label_types"] = label_types;
  proj_json["labels"] = labels;
  proj_json["coords"] = proj.coords;

  StudyReport report;
  report.study = "prune";
  report.raw = json{{"study", "prune"},      {"env", env_json(plan)},
                    {"fractions", plan.fractions}, {"per_seed", per_seed},
                    {"rows", rows},          {"projection", proj_json}};
  return report;
}

// ---------------------------------------------------------------------------
// Baseline suite
// ---------------------------------------------------------------------------

namespace {

Vocabulary random_word_sample(const Vocabulary& vocab, double fraction, uint64_t seed) {
  const auto take = static_cast<size_t>(ceil_fraction(vocab.size(), fraction));
  std::vector<int> ids(static_cast<size_t>(vocab.size()));
  std::iota(ids.begin(), ids.end(), 1);
  Rng rng(seed);
  rng.shuffle(ids);
  ids.resize(take);
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> words;
  std::vector<int64_t> counts;
  for (int id : ids) {
    words.push_back(vocab.word_of(id));
    counts.push_back(vocab.count_of(words.back()));
  }
  return Vocabulary(std::move(words), std::move(counts));
}

}  // namespace

StudyReport run_baseline_suite(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.raw_train_root.empty() || plan.raw_test_root.empty())
    throw std::invalid_argument("baseline suite needs raw train/test roots for re-encoding");
  const CorpusBundle data = load_preprocessed(plan.data_dir);
  const EmbeddingMatrix emb = load_word_vectors(plan.embeddings_path, data.vocab);
  const SentimentCNN basic = obtain_basic_model(plan, data, emb);

  const ImportanceTable importance = word_importance_fast(emb, basic.conv1);
  const std::vector<std::string> ranked = rank_words(importance, data.vocab, 1.0);

  const FilterRules rules = load_rules(plan);
  const TokenizedCorpus train_corpus = tokenize_root(plan.raw_train_root, rules);
  const TokenizedCorpus test_corpus = tokenize_root(plan.raw_test_root, rules);

  const double f = plan.keep_fraction;
  const Vocabulary top_vocab = prune_vocabulary(data.vocab, ranked, f);
  const Vocabulary except_vocab = complement_vocabulary(data.vocab, ranked, f);

  const std::vector<std::string> conditions = {"most_important", "all_words", "random_words",
                                               "all_except_important"};
  json per_seed = json::array();
  std::map<std::string, std::vector<double>> test_accs, train_accs, epoch_secs;
  std::map<std::string, int64_t> word_counts, param_counts;
  std::map<std::string, double> pct_words;
  json traces;

  for (size_t si = 0; si < plan.seeds.size(); ++si) {
    const uint64_t seed = plan.seeds[si];
    TrainConfig cfg = plan.train_cfg;
    cfg.seed = seed;
    json seed_results;
    for (const auto& name : conditions) {
      const Vocabulary* vocab = nullptr;
      Vocabulary sampled;
      double pct = 100.0;
      if (name == "most_important") {
        vocab = &top_vocab;
        pct = f * 100.0;
      } else if (name == "all_words") {
        vocab = &data.vocab;
        pct = 100.0;
      } else if (name == "random_words") {
        sampled = random_word_sample(data.vocab, f, seed ^ kSaltSample);
        vocab = &sampled;
        pct = f * 100.0;
      } else {
        vocab = &except_vocab;
        pct = (1.0 - f) * 100.0;
      }
      const EncodedBundle enc =
          encode_and_split(train_corpus, test_corpus, *vocab, plan.split_ratio, plan.split_seed);
      SentimentCNN model =
          build_model(vocab->size(), random_embedding(*vocab, seed), true, seed);
      const ConditionOutcome out = train_and_score(model, enc.train, enc.val, enc.test, cfg);
      log_condition("baseline", name, seed, out.train_acc, out.test_acc,
                    out.avg_epoch_seconds);
      seed_results[name] = {{"word_count", vocab->size()},
                            {"train_acc", out.train_acc},
                            {"test_acc", out.test_acc},
                            {"avg_epoch_seconds", out.avg_epoch_seconds},
                            {"param_count", out.param_total}};
      test_accs[name].push_back(out.test_acc);
      train_accs[name].push_back(out.train_acc);
      epoch_secs[name].push_back(out.avg_epoch_seconds);
      word_counts[name] = vocab->size();
      param_counts[name] = out.param_total;
      pct_words[name] = pct;
      if (si == 0) traces[name] = out.trace;
    }
    per_seed.push_back(json{{"seed", seed}, {"results", seed_results}});
  }

  json rows = json::array();
  for (const auto& name : conditions) {
    rows.push_back(json{{"condition", name},
                        {"pct_words", pct_words[name]},
                        {"word_count", word_counts[name]},
                        {"train_acc", median(train_accs[name])},
                        {"test_acc", median(test_accs[name])},
                        {"avg_epoch_seconds", median(epoch_secs[name])},
                        {"param_count", param_counts[name]}});
  }

  StudyReport report;
  report.study = "baseline";
  report.raw = json{{"study", "baseline"},   {"env", env_json(plan)},
                    {"conditions", conditions}, {"per_seed", per_seed},
                    {"rows", rows},          {"traces", traces}};
  return report;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

namespace {

void write_env_header(std::ofstream& out, const json& env, char comment = '#') {
  out << comment << " precision=" << env.at("precision").get<std::string>();
  out << " workers=" << env.at("workers");
  out << " serial_timing=" << (env.at("serial_timing").get<bool>() ? "true" : "false");
  out << " hardware_threads=" << env.at("hardware_threads");
  out << " seeds=";
  const auto& seeds = env.at("seeds");
  for (size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report file: " + path.string());
  return out;
}

void write_trace_tsv(const fs::path& path, const json& env, const json& traces) {
  auto out = open_out(path);
  write_env_header(out, env);
  out << "condition\tepoch_fraction\ttrain_acc\tval_acc\tseconds_elapsed\n";
  for (const auto& [name, arr] : traces.items()) {
    for (const auto& p : arr) {
      out << name << "\t" << format_fixed(p[0], 4) << "\t" << format_fixed(p[1], 4) << "\t"
          << format_fixed(p[2], 4) << "\t" << format_fixed(p[3], 4) << "\n";
    }
  }
}

void write_projection_tsv(const fs::path& path, const json& proj) {
  auto out = open_out(path);
  const auto& types = proj.at("label_types");
  const auto& labels = proj.at("labels");
  const auto& coords = proj.at("coords");
  for (size_t i = 0; i < labels.size(); ++i) {
    out << types[i].get<std::string>() << "\t" << labels[i].get<std::string>() << "\t"
        << format_sig9(coords[2 * i]) << "\t" << format_sig9(coords[2 * i + 1]) << "\n";
  }
}

}  // namespace

std::string report_dir_for(const ExperimentPlan& plan, const std::string& study) {
  const std::string stamp = plan.stamp.empty() ? now_stamp() : plan.stamp;
  return (fs::path(plan.output_dir) / study / stamp).string();
}

std::vector<std::string> write_reports(const StudyReport& report, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path base(dir);
  std::vector<std::string> written;
  const json& env = report.raw.at("env");

  {
    auto out = open_out(base / "raw_results.json");
    out << report.raw.dump(2) << "\n";
    written.push_back((base / "raw_results.json").string());
  }

  if (report.study == "shuffle") {
    auto out = open_out(base / "shuffle.csv");
    write_env_header(out, env);
    out << "condition,train_accuracy,test_accuracy,accuracy_improvement\n";
    for (const auto& row : report.raw.at("rows")) {
      out << row.at("condition").get<std::string>() << ","
          << format_fixed(row.at("train_acc"), 2) << "," << format_fixed(row.at("test_acc"), 2)
          << "," << format_fixed(row.at("improvement"), 2) << "\n";
    }
    written.push_back((base / "shuffle.csv").string());
    write_trace_tsv(base / "fig1_traces.tsv", env, report.raw.at("traces"));
    written.push_back((base / "fig1_traces.tsv").string());
  } else if (report.study == "cluster") {
    auto out = open_out(base / "cluster.csv");
    write_env_header(out, env);
    out << "k,sse,top_cluster_word_count,top_cluster_word_percent,filter_fraction\n";
    for (const auto& row : report.raw.at("rows")) {
      out << row.at("k") << "," << format_fixed(row.at("sse"), 2) << ","
          << row.at("top_word_count") << "," << format_fixed(row.at("top_word_percent"), 2)
          << "," << format_fixed(row.at("filter_fraction"), 4) << "\n";
    }
    written.push_back((base / "cluster.csv").string());
    write_projection_tsv(base / "fig2_words_vs_filters.tsv", report.raw.at("projection"));
    written.push_back((base / "fig2_words_vs_filters.tsv").string());
  } else if (report.study == "prune") {
    auto out = open_out(base / "prune.csv");
    write_env_header(out, env);
    out << "words_kept_percent,word_count,train_accuracy,test_accuracy\n";
    for (const auto& row : report.raw.at("rows")) {
      out << format_fixed(row.at("fraction").get<double>() * 100.0, 1) << ","
          << row.at("word_count") << "," << format_fixed(row.at("train_acc"), 2) << ","
          << format_fixed(row.at("test_acc"), 2) << "\n";
    }
    written.push_back((base / "prune.csv").string());
    write_projection_tsv(base / "fig3_words_projection.tsv", report.raw.at("projection"));
    written.push_back((base / "fig3_words_projection.tsv").string());
    // Figure 4: the important words alone
    auto top = open_out(base / "fig4_top_words.tsv");
    const auto& proj = report.raw.at("projection");
    const auto& types = proj.at("label_types");
    const auto& labels = proj.at("labels");
    const auto& coords = proj.at("coords");
    for (size_t i = 0; i < labels.size(); ++i) {
      if (types[i].get<std::string>() != "top_word") continue;
      top << "top_word\t" << labels[i].get<std::string>() << "\t"
          << format_sig9(coords[2 * i]) << "\t" << format_sig9(coords[2 * i + 1]) << "\n";
    }
    written.push_back((base / "fig4_top_words.tsv").string());
  } else if (report.study == "baseline") {
    auto out = open_out(base / "baseline.csv");
    write_env_header(out, env);
    out << "model_name,words_used_percent,word_count,train_accuracy,test_accuracy,"
           "avg_epoch_seconds,param_count\n";
    for (const auto& row : report.raw.at("rows")) {
      out << row.at("condition").get<std::string>() << ","
          << format_fixed(row.at("pct_words"), 1) << "," << row.at("word_count") << ","
          << format_fixed(row.at("train_acc"), 2) << "," << format_fixed(row.at("test_acc"), 2)
          << "," << format_fixed(row.at("avg_epoch_seconds"), 4) << ","
          << row.at("param_count") << "\n";
    }
    written.push_back((base / "baseline.csv").string());
    write_trace_tsv(base / "fig5_traces.tsv", env, report.raw.at("traces"));
    written.push_back((base / "fig5_traces.tsv").string());
  } else {
    throw std::invalid_argument("unknown study in report: " + report.study);
  }
  return written;
}

StudyReport load_raw_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open raw report: " + path);
  StudyReport r;
  r.raw = json::parse(in);
  r.study = r.raw.at("study");
  return r;
}

}  // namespace textcnn
