#include "textcnnlab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "textcnnlab/embedding.hpp"
#include "textcnnlab/experiments.hpp"
#include "textcnnlab/interpret.hpp"
#include "textcnnlab/model.hpp"
#include "textcnnlab/train.hpp"
#include "textcnnlab/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textcnn {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string default_asset(const std::string& name) {
  // look next to the binary's working directory first, then the repo layout
  for (const auto& candidate : {fs::path("assets") / name, fs::path("../assets") / name}) {
    if (fs::exists(candidate)) return candidate.string();
  }
  return (fs::path("assets") / name).string();
}

struct CommonTrainFlags {
  int epochs = 5;
  double lr0 = 1e-3;
  double decay = 0.7;
  int batch = 64;
  uint64_t seed = 1;
  int workers = 1;
  int trace_eval_size = 256;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr0", lr0, "initial learning rate");
    cmd->add_option("--decay", decay, "per-epoch learning-rate multiplier");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--workers", workers, "worker threads (results depend only on seed+workers)");
    cmd->add_option("--trace-eval-size", trace_eval_size,
                    "validation subset size for the 1/20-epoch trace (0 = full)");
  }

  TrainConfig to_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr0 = lr0;
    cfg.decay = decay;
    cfg.batch = batch;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.trace_eval_size = trace_eval_size;
    cfg.log_epochs = true;
    return cfg;
  }
};

struct ExperimentFlags {
  std::string data_dir;
  std::string raw_train, raw_test;
  std::string emb_path;
  std::string checkpoint_dir;
  std::string out_dir = "reports";
  std::string stamp;
  std::string stopwords = default_asset("stopwords.txt");
  std::string dictionary = default_asset("english_words.txt");
  std::vector<uint64_t> seeds = {1};
  double split_ratio = 0.9;
  uint64_t split_seed = 1;
  bool serial_timing = false;
  CommonTrainFlags train_flags;

  void attach(CLI::App* cmd, bool needs_raw) {
    cmd->add_option("--data", data_dir, "preprocessed corpus directory")->required();
    if (needs_raw) {
      const std::string root = env_or("TEXTCNN_LAB_DATA", "");
      raw_train = root.empty() ? "" : (fs::path(root) / "train").string();
      raw_test = root.empty() ? "" : (fs::path(root) / "test").string();
      cmd->add_option("--raw-train", raw_train, "raw pos/neg training tree")
          ->required(raw_train.empty());
      cmd->add_option("--raw-test", raw_test, "raw pos/neg test tree")
          ->required(raw_test.empty());
      cmd->add_option("--stopwords", stopwords, "stopword list");
      cmd->add_option("--dictionary", dictionary, "english word list");
    }
    cmd->add_option("--emb", emb_path, "word vector file")->required();
    cmd->add_option("--checkpoint", checkpoint_dir,
                    "basic-model checkpoint directory (trained on demand when missing)");
    cmd->add_option("--out", out_dir, "report output root");
    cmd->add_option("--stamp", stamp, "report subdirectory name (default: UTC timestamp)");
    cmd->add_option("--seeds", seeds, "seeds, e.g. --seeds 1 2 3")->delimiter(',');
    cmd->add_option("--split-ratio", split_ratio, "train/val split ratio");
    cmd->add_option("--split-seed", split_seed, "train/val split seed");
    cmd->add_flag("--serial-timing", serial_timing,
                  "run timed conditions strictly sequentially");
    train_flags.attach(cmd);
  }

  ExperimentPlan to_plan(const std::string& study) const {
    ExperimentPlan plan;
    plan.study = study;
    plan.seeds = seeds;
    plan.data_dir = data_dir;
    plan.raw_train_root = raw_train;
    plan.raw_test_root = raw_test;
    plan.stopwords_path = stopwords;
    plan.dictionary_path = dictionary;
    plan.embeddings_path = emb_path;
    plan.checkpoint_dir = checkpoint_dir;
    plan.train_cfg = train_flags.to_config();
    plan.split_ratio = split_ratio;
    plan.split_seed = split_seed;
    plan.output_dir = out_dir;
    plan.stamp = stamp;
    plan.serial_timing = serial_timing;
    return plan;
  }
};

int cmd_preprocess(const std::string& data_root, const std::string& test_root,
                   const std::string& out_dir, const std::string& stopwords,
                   const std::string& dictionary, int64_t min_count, double ratio,
                   uint64_t seed, int seq_len) {
  const FilterRules rules = FilterRules::load(stopwords, dictionary);
  auto [reviews, report] = load_review_dir(data_root);
  for (const auto& w : report.warnings) std::cerr << "[preprocess] " << w << "\n";
  if (reviews.empty()) {
    std::cerr << "[preprocess] 0 reviews ingested\n";
    return 1;
  }
  std::vector<std::vector<std::string>> tokens;
  std::vector<int> labels;
  tokens.reserve(reviews.size());
  for (const auto& r : reviews) {
    tokens.push_back(tokenize_and_filter(r, rules));
    labels.push_back(r.label);
  }

  // split raw reviews first so the vocabulary sees the training split only
  const auto [train_idx, val_idx] = split_indices(labels, ratio, seed);
  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(train_idx.size());
  for (size_t i : train_idx) train_tokens.push_back(tokens[i]);
  const Vocabulary vocab = build_vocabulary(train_tokens, min_count);

  fs::create_directories(out_dir);
  vocab.save_tsv((fs::path(out_dir) / "vocab.tsv").string());

  auto encode_split = [&](const std::vector<size_t>& idx, const std::string& tag) {
    EncodedDataset ds;
    ds.vocab_hash = vocab.hash();
    ds.split_tag = tag;
    ds.reviews.reserve(idx.size());
    for (size_t i : idx)
      ds.reviews.push_back(EncodedReview{encode(tokens[i], vocab, seq_len), labels[i]});
    return ds;
  };
  encode_split(train_idx, "train").save((fs::path(out_dir) / "train.tsv").string());
  encode_split(val_idx, "val").save((fs::path(out_dir) / "val.tsv").string());

  json summary;
  summary["reviews"] = reviews.size();
  summary["train"] = train_idx.size();
  summary["val"] = val_idx.size();
  summary["vocab_size"] = vocab.size();
  summary["vocab_hash"] = vocab.hash();
  summary["skipped_non_utf8"] = report.skipped_non_utf8;
  summary["seq_len"] = seq_len;
  summary["min_count"] = min_count;
  summary["split_ratio"] = ratio;
  summary["split_seed"] = seed;

  if (!test_root.empty()) {
    auto [test_reviews, test_report] = load_review_dir(test_root);
    for (const auto& w : test_report.warnings) std::cerr << "[preprocess] " << w << "\n";
    EncodedDataset test;
    test.vocab_hash = vocab.hash();
    test.split_tag = "test";
    for (const auto& r : test_reviews)
      test.reviews.push_back(
          EncodedReview{encode(tokenize_and_filter(r, rules), vocab, seq_len), r.label});
    test.save((fs::path(out_dir) / "test.tsv").string());
    summary["test"] = test.reviews.size();
  }

  std::ofstream sout(fs::path(out_dir) / "preprocess.json", std::ios::binary);
  sout << summary.dump(2) << "\n";
  std::cerr << "[preprocess] vocab_size=" << vocab.size() << " train=" << train_idx.size()
            << " val=" << val_idx.size() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"textcnn-lab: a 1-D CNN sentiment workbench with filter-level analysis"};
  app.set_config("--config", "", "flat key=value config file with [subcommand] sections");
  app.require_subcommand(1);

  // ---- preprocess ----
  auto* pre = app.add_subcommand("preprocess", "tokenize, build vocabulary, encode and split");
  std::string pre_data = env_or("TEXTCNN_LAB_DATA", "");
  std::string pre_test, pre_out = "data";
  std::string pre_stop = default_asset("stopwords.txt");
  std::string pre_dict = default_asset("english_words.txt");
  int64_t pre_min_count = 1;
  double pre_ratio = 0.9;
  uint64_t pre_seed = 1;
  int pre_seq_len = kSequenceLength;
  pre->add_option("--data", pre_data, "raw review root containing pos/ and neg/")
      ->required(pre_data.empty());
  pre->add_option("--test-data", pre_test, "optional raw test root (encoded with the same vocab)");
  pre->add_option("--out", pre_out, "output directory");
  pre->add_option("--stopwords", pre_stop, "stopword list");
  pre->add_option("--dictionary", pre_dict, "english word list");
  pre->add_option("--min-count", pre_min_count, "minimum word frequency");
  pre->add_option("--ratio", pre_ratio, "train/val ratio");
  pre->add_option("--seed", pre_seed, "split seed");
  pre->add_option("--seq-len", pre_seq_len, "encoded sequence length");

  // ---- embed-train ----
  auto* et = app.add_subcommand("embed-train", "train skip-gram word vectors on the corpus");
  std::string et_data, et_vocab, et_out = "vectors.txt";
  SkipGramConfig et_cfg;
  std::string et_stop = default_asset("stopwords.txt");
  std::string et_dict = default_asset("english_words.txt");
  et->add_option("--data", et_data, "raw review root")->required();
  et->add_option("--vocab", et_vocab, "vocabulary TSV")->required();
  et->add_option("--out", et_out, "output vector file");
  et->add_option("--stopwords", et_stop, "stopword list");
  et->add_option("--dictionary", et_dict, "english word list");
  et->add_option("--window", et_cfg.window, "context window");
  et->add_option("--negatives", et_cfg.negatives, "negative samples per pair");
  et->add_option("--epochs", et_cfg.epochs, "epochs");
  et->add_option("--lr", et_cfg.lr, "initial learning rate");
  et->add_option("--seed", et_cfg.seed, "random seed");
  et->add_option("--workers", et_cfg.workers, "workers (>1 is lossy and nondeterministic)");

  // ---- embed-load ----
  auto* el = app.add_subcommand("embed-load", "validate a vector file against a vocabulary");
  std::string el_vectors, el_vocab, el_out;
  uint64_t el_seed = 1;
  el->add_option("--vectors", el_vectors, "word vector file")->required();
  el->add_option("--vocab", el_vocab, "vocabulary TSV")->required();
  el->add_option("--out", el_out, "write the resolved matrix back out (round-trip)");
  el->add_option("--seed", el_seed, "seed for missing-word fills");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train the sentiment model");
  std::string tr_data, tr_emb, tr_out = "checkpoint";
  bool tr_emb_trainable = false;
  bool tr_random_emb = false;
  CommonTrainFlags tr_flags;
  tr->add_option("--data", tr_data, "preprocessed corpus directory")->required();
  tr->add_option("--emb", tr_emb, "word vector file (omit with --random-emb)");
  tr->add_option("--out", tr_out, "checkpoint output directory");
  tr->add_flag("--emb-trainable", tr_emb_trainable, "train the embedding rows too");
  tr->add_flag("--random-emb", tr_random_emb, "random embeddings instead of a vector file");
  tr_flags.attach(tr);

  // ---- importance ----
  auto* imp = app.add_subcommand("importance", "rank words by activation-sum importance");
  std::string imp_ckpt, imp_emb, imp_vocab, imp_out = "importance.tsv";
  bool imp_brute = false;
  imp->add_option("--checkpoint", imp_ckpt, "trained model checkpoint")->required();
  imp->add_option("--emb", imp_emb, "word vector file (default: embedding from the checkpoint)");
  imp->add_option("--vocab", imp_vocab, "vocabulary TSV")->required();
  imp->add_option("--out", imp_out, "output TSV (rank, word, score)");
  imp->add_flag("--brute", imp_brute, "use the triple-loop scorer instead of the factored one");

  // ---- experiment suites ----
  ExperimentFlags shuffle_flags, cluster_flags, prune_flags, baseline_flags;
  auto* sh = app.add_subcommand("shuffle-exp", "first-layer shuffle study");
  shuffle_flags.attach(sh, false);
  auto* cl = app.add_subcommand("cluster-exp", "k-means sweep over words and filter slices");
  cluster_flags.attach(cl, false);
  std::vector<int> cl_ks = {1, 5, 10, 20, 100, 200, 500, 1000, 2000};
  cl->add_option("--ks", cl_ks, "cluster counts")->delimiter(',');
  auto* pr = app.add_subcommand("prune-exp", "vocabulary pruning sweep");
  prune_flags.attach(pr, true);
  std::vector<double> pr_fractions = {1.0, 0.8, 0.5, 0.1, 0.05, 0.01, 0.005};
  pr->add_option("--fractions", pr_fractions, "kept-word fractions")->delimiter(',');
  auto* ba = app.add_subcommand("baseline-exp", "important-vs-baseline model comparison");
  baseline_flags.attach(ba, true);
  double ba_keep = 0.05;
  ba->add_option("--keep-fraction", ba_keep, "important-word fraction");

  // ---- report ----
  auto* rep = app.add_subcommand("report", "re-render report files from raw_results.json");
  std::string rep_raw, rep_out;
  rep->add_option("--raw", rep_raw, "raw_results.json from a previous run")->required();
  rep->add_option("--out", rep_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (pre->parsed()) {
      return cmd_preprocess(pre_data, pre_test, pre_out, pre_stop, pre_dict, pre_min_count,
                            pre_ratio, pre_seed, pre_seq_len);
    }
    if (et->parsed()) {
      const FilterRules rules = FilterRules::load(et_stop, et_dict);
      const Vocabulary vocab = Vocabulary::load_tsv(et_vocab);
      auto [reviews, report] = load_review_dir(et_data);
      std::vector<std::vector<std::string>> tokens;
      tokens.reserve(reviews.size());
      for (const auto& r : reviews) tokens.push_back(tokenize_and_filter(r, rules));
      SkipGramStats stats;
      const EmbeddingMatrix emb = train_skipgram(tokens, vocab, et_cfg, &stats);
      save_word_vectors(emb, vocab, et_out);
      std::cerr << "[embed-train] pairs=" << stats.pairs_trained << " final_loss="
                << format_fixed(stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back(), 4)
                << " -> " << et_out << "\n";
      return 0;
    }
    if (el->parsed()) {
      const Vocabulary vocab = Vocabulary::load_tsv(el_vocab);
      std::vector<std::string> warnings;
      const EmbeddingMatrix emb = load_word_vectors(el_vectors, vocab, el_seed, &warnings);
      for (const auto& w : warnings) std::cerr << "[embed-load] " << w << "\n";
      std::cerr << "[embed-load] rows=" << emb.row_count() << " dim=" << emb.dim << "\n";
      if (!el_out.empty()) save_word_vectors(emb, vocab, el_out);
      return 0;
    }
    if (tr->parsed()) {
      const CorpusBundle data = load_preprocessed(tr_data);
      TrainConfig cfg = tr_flags.to_config();
      EmbeddingMatrix emb;
      if (tr_random_emb) {
        emb = random_embedding(data.vocab, cfg.seed);
      } else {
        if (tr_emb.empty())
          throw std::invalid_argument("train: provide --emb or pass --random-emb");
        emb = load_word_vectors(tr_emb, data.vocab);
      }
      SentimentCNN model = build_model(data.vocab.size(), emb, tr_emb_trainable, cfg.seed);
      const TrainReport report = train(model, data.train, data.val, cfg);
      fs::create_directories(tr_out);
      save_checkpoint(model, tr_out);
      report.save_trace_csv((fs::path(tr_out) / "train_trace.csv").string(), "train");
      report.save_summary_json((fs::path(tr_out) / "summary.json").string(), "train");
      if (!data.test.reviews.empty())
        std::cerr << "[train] test_acc="
                  << format_fixed(evaluate(model, data.test, cfg.workers), 2) << "\n";
      std::cerr << "[train] checkpoint -> " << tr_out << "\n";
      return 0;
    }
    if (imp->parsed()) {
      const Vocabulary vocab = Vocabulary::load_tsv(imp_vocab);
      const SentimentCNN model = load_checkpoint(imp_ckpt, vocab.hash());
      const EmbeddingMatrix emb = imp_emb.empty() ? embedding_from_model(model)
                                                  : load_word_vectors(imp_emb, vocab);
      const ImportanceTable table = imp_brute ? word_importance_bruteforce(emb, model.conv1)
                                              : word_importance_fast(emb, model.conv1);
      table.save_tsv(imp_out, vocab);
      std::cerr << "[importance] " << vocab.size() << " words -> " << imp_out << "\n";
      return 0;
    }
    auto run_study = [](const ExperimentPlan& plan,
                        StudyReport (*runner)(const ExperimentPlan&),
                        const std::string& study_name) {
      const StudyReport report = runner(plan);
      const std::string dir = report_dir_for(plan, study_name);
      for (const auto& f : write_reports(report, dir))
        std::cerr << "[report] wrote " << f << "\n";
      return 0;
    };
    if (sh->parsed()) return run_study(shuffle_flags.to_plan("shuffle"), run_shuffle_suite, "shuffle");
    if (cl->parsed()) {
      ExperimentPlan plan = cluster_flags.to_plan("cluster_sweep");
      plan.ks = cl_ks;
      return run_study(plan, run_cluster_sweep, "cluster");
    }
    if (pr->parsed()) {
      ExperimentPlan plan = prune_flags.to_plan("prune_sweep");
      plan.fractions = pr_fractions;
      return run_study(plan, run_prune_sweep, "prune");
    }
    if (ba->parsed()) {
      ExperimentPlan plan = baseline_flags.to_plan("baseline_suite");
      plan.keep_fraction = ba_keep;
      return run_study(plan, run_baseline_suite, "baseline");
    }
    if (rep->parsed()) {
      const StudyReport report = load_raw_report(rep_raw);
      for (const auto& f : write_reports(report, rep_out))
        std::cerr << "[report] wrote " << f << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n" << app.help() << "\n";
  return 2;
}

}  // namespace textcnn
