#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/synth.hpp"
#include "textcnnlab/cli.hpp"
#include "textcnnlab/experiments.hpp"

using namespace textcnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("textcnn_exp_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> args) {
  std::vector<const char*> argv = {"textcnn-lab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// one small corpus + preprocess output shared across the cases below
struct Fixture {
  TempDir dir{"cli"};
  fs::path raw_train, raw_test, data;

  Fixture() {
    using namespace textcnn::testsupport;
    SynthSpec spec;
    spec.n_reviews = 120;
    spec.seed = 5;
    spec.n_pos_words = 20;
    spec.n_neg_words = 20;
    spec.n_noise_words = 300;
    spec.n_themes = 2;
    spec.len_min = 20;
    spec.len_max = 60;
    const auto lexicon =
        load_generator_lexicon(asset_path("english_words.txt"), asset_path("stopwords.txt"), 2000);
    const SynthCorpus train_corpus = make_synth_corpus(spec, lexicon);
    SynthSpec test_spec = spec;
    test_spec.n_reviews = 40;
    test_spec.seed = 6;
    const SynthCorpus test_corpus = make_synth_corpus(test_spec, lexicon);

    raw_train = dir.path / "raw" / "train";
    raw_test = dir.path / "raw" / "test";
    write_review_tree(raw_train.string(), train_corpus);
    write_review_tree(raw_test.string(), test_corpus);
    data = dir.path / "data";

    REQUIRE(run({"preprocess", "--data", raw_train.string(), "--test-data", raw_test.string(),
                 "--out", data.string(), "--stopwords", asset_path("stopwords.txt"),
                 "--dictionary", asset_path("english_words.txt"), "--seed", "3"}) == 0);
  }
};

}  // namespace

TEST_CASE("cli usage errors exit with code 2") {
  CHECK(run({"no-such-subcommand"}) == 2);
  CHECK(run({}) == 2);
  CHECK(run({"preprocess", "--data"}) == 2);  // missing value
}

TEST_CASE("cli validation failures exit with code 1") {
  CHECK(run({"preprocess", "--data", "/definitely/not/here", "--out", "/tmp/x_textcnn"}) == 1);
}

TEST_CASE("preprocess emits vocabulary and split files with the documented formats") {
  Fixture fx;
  CHECK(fs::exists(fx.data / "vocab.tsv"));
  CHECK(fs::exists(fx.data / "train.tsv"));
  CHECK(fs::exists(fx.data / "val.tsv"));
  CHECK(fs::exists(fx.data / "test.tsv"));

  const Vocabulary vocab = Vocabulary::load_tsv((fx.data / "vocab.tsv").string());
  CHECK(vocab.size() > 50);

  const CorpusBundle bundle = load_preprocessed(fx.data.string());
  CHECK(bundle.train.reviews.size() == 108);  // floor(0.9 * 120)
  CHECK(bundle.val.reviews.size() == 12);
  CHECK(bundle.test.reviews.size() == 40);
  for (const auto& r : bundle.train.reviews) CHECK(r.ids.size() == 250);

  // determinism: the same invocation reproduces the files byte for byte
  const std::string vocab_before = slurp(fx.data / "vocab.tsv");
  const std::string train_before = slurp(fx.data / "train.tsv");
  REQUIRE(run({"preprocess", "--data", fx.raw_train.string(), "--test-data",
               fx.raw_test.string(), "--out", fx.data.string(), "--stopwords",
               testsupport::asset_path("stopwords.txt"), "--dictionary",
               testsupport::asset_path("english_words.txt"), "--seed", "3"}) == 0);
  CHECK(slurp(fx.data / "vocab.tsv") == vocab_before);
  CHECK(slurp(fx.data / "train.tsv") == train_before);
}

TEST_CASE("embed-train, train, importance and report round-trip through the cli") {
  Fixture fx;
  const auto vectors = (fx.dir.path / "vectors.txt").string();
  REQUIRE(run({"embed-train", "--data", fx.raw_train.string(), "--vocab",
               (fx.data / "vocab.tsv").string(), "--out", vectors, "--stopwords",
               testsupport::asset_path("stopwords.txt"), "--dictionary",
               testsupport::asset_path("english_words.txt"), "--epochs", "2", "--seed",
               "4"}) == 0);
  CHECK(fs::exists(vectors));

  // embed-load round-trips the vector file
  const auto vectors2 = (fx.dir.path / "vectors2.txt").string();
  REQUIRE(run({"embed-load", "--vectors", vectors, "--vocab",
               (fx.data / "vocab.tsv").string(), "--out", vectors2}) == 0);
  CHECK(slurp(vectors) == slurp(vectors2));

  const auto ckpt = (fx.dir.path / "ckpt").string();
  REQUIRE(run({"train", "--data", fx.data.string(), "--emb", vectors, "--out", ckpt,
               "--epochs", "1", "--batch", "32", "--seed", "4"}) == 0);
  CHECK(fs::exists(fs::path(ckpt) / "manifest.json"));
  CHECK(fs::exists(fs::path(ckpt) / "weights.bin"));
  CHECK(fs::exists(fs::path(ckpt) / "train_trace.csv"));

  const auto imp = (fx.dir.path / "importance.tsv").string();
  REQUIRE(run({"importance", "--checkpoint", ckpt, "--vocab",
               (fx.data / "vocab.tsv").string(), "--emb", vectors, "--out", imp}) == 0);
  // one line per vocabulary word
  std::ifstream in(imp);
  size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  const Vocabulary vocab = Vocabulary::load_tsv((fx.data / "vocab.tsv").string());
  CHECK(lines == static_cast<size_t>(vocab.size()));

  // cluster study at tiny k, then regenerate the report from raw results
  const auto reports = (fx.dir.path / "reports").string();
  REQUIRE(run({"cluster-exp", "--data", fx.data.string(), "--emb", vectors, "--checkpoint",
               ckpt, "--out", reports, "--stamp", "run1", "--ks", "1,2", "--seeds", "1"}) == 0);
  const fs::path run_dir = fs::path(reports) / "cluster" / "run1";
  CHECK(fs::exists(run_dir / "cluster.csv"));
  CHECK(fs::exists(run_dir / "fig2_words_vs_filters.tsv"));
  CHECK(fs::exists(run_dir / "raw_results.json"));

  const auto regen = (fx.dir.path / "regen").string();
  REQUIRE(run({"report", "--raw", (run_dir / "raw_results.json").string(), "--out", regen}) ==
          0);
  CHECK(slurp(fs::path(regen) / "cluster.csv") == slurp(run_dir / "cluster.csv"));
  CHECK(slurp(fs::path(regen) / "fig2_words_vs_filters.tsv") ==
        slurp(run_dir / "fig2_words_vs_filters.tsv"));

  // cluster.csv: header comment + column header + one row per k
  std::istringstream csv(slurp(run_dir / "cluster.csv"));
  size_t csv_lines = 0;
  while (std::getline(csv, line)) ++csv_lines;
  CHECK(csv_lines == 2 + 2);
}

TEST_CASE("shuffle report renders four rows with the improvement column") {
  // rendering is driven purely by the raw json, so synthesize one
  StudyReport report;
  report.study = "shuffle";
  nlohmann::json rows = nlohmann::json::array();
  const char* names[] = {"basic", "shuffle_within", "shuffle_across", "random_frozen"};
  const double accs[] = {83.19, 81.37, 78.45, 67.93};
  for (int i = 0; i < 4; ++i) {
    rows.push_back({{"condition", names[i]},
                    {"train_acc", 90.0},
                    {"test_acc", accs[i]},
                    {"improvement", accs[i] - (i < 3 ? accs[i + 1] : 50.0)}});
  }
  report.raw = nlohmann::json{
      {"study", "shuffle"},
      {"env",
       {{"precision", "float32"}, {"workers", 1}, {"serial_timing", true},
        {"hardware_threads", 2}, {"seeds", {1, 2, 3}}}},
      {"conditions", {"basic", "shuffle_within", "shuffle_across", "random_frozen"}},
      {"rows", rows},
      {"traces", nlohmann::json::object()}};

  TempDir out("shuffle_report");
  write_reports(report, out.path.string());
  const std::string csv = slurp(out.path / "shuffle.csv");
  std::istringstream ss(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(ss, line)) lines.push_back(line);
  REQUIRE(lines.size() == 6);  // env header + column header + 4 rows
  CHECK(lines[2] == "basic,90.00,83.19,1.82");
  CHECK(lines[3] == "shuffle_within,90.00,81.37,2.92");
  CHECK(lines[4] == "shuffle_across,90.00,78.45,10.52");
  CHECK(lines[5] == "random_frozen,90.00,67.93,17.93");
}
