#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "model.hpp"
#include "runner.hpp"

using namespace comorec;
using namespace comorec::runner;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("comorec_runner_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++)))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Extracts the message an expression throws so tests can assert on a prefix
// or fragment instead of the entire (library-worded) text.
template <typename Error, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "<no exception>";
}

// A dataset small enough that a full train/eval cycle takes well under a
// second, with enough cluster signal that nothing degenerates.
void make_dataset(const TempDir& dir) {
  auto config = parse_synth_config(
      R"({"n_subjects": 60, "n_codes": 12, "n_clusters": 3, "p_in": 0.7,
          "p_out": 0.05, "symptoms_per_cluster": 2, "symptom_noise": 0.0,
          "seed": 5})",
      "cfg");
  std::ostringstream log;
  run_synth(config, dir.path(), log);
}

TrainOptions quick_train_options(const TempDir& dir, const std::string& model_name) {
  TrainOptions options;
  options.diagnoses_path = dir.file("diagnoses.csv");
  options.out_path = dir.file(model_name);
  options.train.epochs = 3;
  options.train.embedding_dim = 4;
  options.train.hidden_sizes = {16, 8};
  options.train.seed = 1;
  return options;
}

}  // namespace

TEST_CASE("parse_synth_config applies defaults and overrides") {
  auto defaults = parse_synth_config("{}", "cfg");
  CHECK(defaults.n_subjects == 1000);
  CHECK(defaults.n_codes == 60);
  CHECK(defaults.n_clusters == 6);
  CHECK(defaults.p_in == 0.6);
  CHECK(defaults.p_out == 0.05);
  CHECK(defaults.symptoms_per_cluster == 3);
  CHECK(defaults.symptom_noise == 0.1);
  CHECK(defaults.seed == 0);

  auto custom = parse_synth_config(
      R"({"n_subjects": 10, "n_codes": 5, "n_clusters": 2, "p_in": 0.9,
          "p_out": 0.01, "symptoms_per_cluster": 1, "symptom_noise": 0.0,
          "seed": 42})",
      "cfg");
  CHECK(custom.n_subjects == 10);
  CHECK(custom.n_clusters == 2);
  CHECK(custom.p_in == 0.9);
  CHECK(custom.seed == 42);
}

TEST_CASE("config parsing rejects unknown keys, bad types and bad JSON") {
  CHECK_THROWS_WITH_AS(parse_synth_config(R"({"n_patients": 5})", "cfg"),
                       "cfg: unknown config key 'n_patients'", UsageError);

  auto message = thrown_message<UsageError>(
      [] { parse_synth_config(R"({"p_in": "high"})", "cfg"); });
  CHECK(message.find("cfg: bad value for 'p_in'") == 0);

  message = thrown_message<UsageError>([] { parse_synth_config("{not json", "cfg"); });
  CHECK(message.find("cfg: invalid JSON") == 0);

  CHECK_THROWS_WITH_AS(parse_synth_config("[1, 2]", "cfg"),
                       "cfg: config must be a JSON object", UsageError);

  CHECK_THROWS_WITH_AS(parse_train_options(R"({"model": "ncf", "epoch": 5})", "cfg"),
                       "cfg: unknown config key 'epoch'", UsageError);
  CHECK_THROWS_WITH_AS(parse_eval_options(R"({"candidates": 50})", "cfg"),
                       "cfg: unknown config key 'candidates'", UsageError);
}

TEST_CASE("parse_train_options covers every documented key") {
  auto defaults = parse_train_options("{}", "cfg");
  CHECK(defaults.kind == ModelKind::Ncf);
  CHECK(defaults.train.embedding_dim == 8);
  CHECK(defaults.train.hidden_sizes == std::vector<uint32_t>{64, 32});
  CHECK(defaults.train.epochs == 20);
  CHECK(defaults.train.batch_size == 128);
  CHECK(defaults.train.learning_rate == 1e-3);
  CHECK(defaults.train.neg_ratio == 4);
  CHECK(defaults.train.early_stopping_patience == 0);
  CHECK(defaults.train_fraction == 0.8);
  CHECK(defaults.validation_fraction == 0.1);
  CHECK(defaults.test_fraction == 0.1);
  CHECK_FALSE(defaults.top_k_codes.has_value());
  CHECK_FALSE(defaults.max_notes.has_value());

  auto custom = parse_train_options(
      R"({"model": "dhf", "diagnoses": "d.csv", "notes": "n.csv",
          "lexicon": "l.tsv", "top_k_codes": 10, "max_notes": 100,
          "neg_ratio": 2, "seed": 7, "out": "m.json", "embedding_dim": 4,
          "hidden_sizes": [16, 8], "epochs": 3, "batch_size": 32,
          "learning_rate": 0.01, "early_stopping_patience": 2,
          "train_fraction": 0.7, "validation_fraction": 0.2,
          "test_fraction": 0.1})",
      "cfg");
  CHECK(custom.kind == ModelKind::Dhf);
  CHECK(custom.diagnoses_path == "d.csv");
  CHECK(custom.notes_path == "n.csv");
  CHECK(custom.lexicon_path == "l.tsv");
  CHECK(custom.top_k_codes == 10);
  CHECK(custom.max_notes == 100);
  CHECK(custom.train.neg_ratio == 2);
  CHECK(custom.train.seed == 7);
  CHECK(custom.out_path == "m.json");
  CHECK(custom.train.hidden_sizes == std::vector<uint32_t>{16, 8});
  CHECK(custom.train.learning_rate == 0.01);
  CHECK(custom.train_fraction == 0.7);
}

TEST_CASE("parse_eval_options covers every documented key") {
  auto defaults = parse_eval_options("{}", "cfg");
  CHECK(defaults.neg_ratio == 4);
  CHECK(defaults.seed == 0);
  CHECK(defaults.k == 10);
  CHECK(defaults.n_candidates == 100);
  CHECK(defaults.train_fraction == 0.8);

  auto custom = parse_eval_options(
      R"({"model": "m.json", "diagnoses": "d.csv", "notes": "n.csv",
          "lexicon": "l.tsv", "k": 5, "n_candidates": 20, "neg_ratio": 10,
          "seed": 3, "out": "r.json", "top_k_codes": 6})",
      "cfg");
  CHECK(custom.model_path == "m.json");
  CHECK(custom.k == 5);
  CHECK(custom.n_candidates == 20);
  CHECK(custom.neg_ratio == 10);
  CHECK(custom.seed == 3);
  CHECK(custom.out_path == "r.json");
  CHECK(custom.top_k_codes == 6);
}

TEST_CASE("history_path_for swaps or appends the extension") {
  CHECK(history_path_for("model.json") == "model.history.json");
  CHECK(history_path_for("runs/a/model.json") == "runs/a/model.history.json");
  CHECK(history_path_for("model.bin") == "model.bin.history.json");
  CHECK(history_path_for("model") == "model.history.json");
}

TEST_CASE("run_synth writes the four dataset files") {
  TempDir dir;
  std::ostringstream log;
  auto config = parse_synth_config(
      R"({"n_subjects": 20, "n_codes": 8, "n_clusters": 2,
          "symptoms_per_cluster": 1, "seed": 1})",
      "cfg");
  run_synth(config, dir.path(), log);
  for (const char* name : {"diagnoses.csv", "notes.csv", "truth.json", "lexicon.tsv"}) {
    CHECK(std::filesystem::exists(dir.file(name)));
  }
  CHECK(log.str().find("synth: wrote") != std::string::npos);

  CHECK_THROWS_WITH_AS(run_synth(config, "", log),
                       "synth: an output directory is required", UsageError);
}

TEST_CASE("run_train produces a loadable model and a history sidecar") {
  TempDir dir;
  make_dataset(dir);
  auto options = quick_train_options(dir, "model.json");

  std::ostringstream log;
  run_train(options, log);

  auto model = load_model(dir.file("model.json"));
  CHECK(model.kind == ModelKind::Ncf);
  CHECK(model.subjects.size() > 0);
  CHECK(model.codes.size() == 12);
  CHECK(model.embedding_dim == 4);

  auto history = nlohmann::json::parse(slurp(dir.file("model.history.json")));
  REQUIRE(history.at("epochs").size() == 3);
  const auto& first = history["epochs"][0];
  CHECK(first.at("epoch") == 1);
  CHECK(first.at("train_loss").is_number());
  CHECK(first.at("train_accuracy").is_number());
  CHECK(first.at("validation_accuracy").is_number());

  std::string logged = log.str();
  CHECK(logged.find("ingest: ") != std::string::npos);
  CHECK(logged.find("sampling: split") != std::string::npos);
  CHECK(logged.find("train: epoch 1/3") != std::string::npos);
  CHECK(logged.find("train: wrote") != std::string::npos);
}

TEST_CASE("run_train is byte-deterministic for one seed") {
  TempDir dir;
  make_dataset(dir);

  std::ostringstream log_a, log_b;
  run_train(quick_train_options(dir, "a.json"), log_a);
  run_train(quick_train_options(dir, "b.json"), log_b);
  CHECK(slurp(dir.file("a.json")) == slurp(dir.file("b.json")));
  CHECK(slurp(dir.file("a.history.json")) == slurp(dir.file("b.history.json")));

  auto shifted = quick_train_options(dir, "c.json");
  shifted.train.seed = 2;
  std::ostringstream log_c;
  run_train(shifted, log_c);
  CHECK(slurp(dir.file("a.json")) != slurp(dir.file("c.json")));
}

TEST_CASE("run_train fits a triple model from notes and a lexicon") {
  TempDir dir;
  make_dataset(dir);
  auto options = quick_train_options(dir, "dhf.json");
  options.kind = ModelKind::Dhf;
  options.notes_path = dir.file("notes.csv");
  options.lexicon_path = dir.file("lexicon.tsv");

  std::ostringstream log;
  run_train(options, log);
  auto model = load_model(dir.file("dhf.json"));
  CHECK(model.kind == ModelKind::Dhf);
  CHECK(model.symptoms.size() == 6);  // 3 clusters x 2 planted terms
  CHECK(log.str().find("notes: symptoms for") != std::string::npos);
}

TEST_CASE("run_train validates its options up front") {
  TempDir dir;
  make_dataset(dir);
  std::ostringstream log;

  TrainOptions no_diagnoses;
  no_diagnoses.out_path = dir.file("m.json");
  CHECK_THROWS_WITH_AS(run_train(no_diagnoses, log), "train: --diagnoses is required",
                       UsageError);

  TrainOptions no_out;
  no_out.diagnoses_path = dir.file("diagnoses.csv");
  CHECK_THROWS_WITH_AS(run_train(no_out, log), "train: --out is required", UsageError);

  auto dhf_without_notes = quick_train_options(dir, "m.json");
  dhf_without_notes.kind = ModelKind::Dhf;
  CHECK_THROWS_WITH_AS(run_train(dhf_without_notes, log),
                       "train: a dhf model requires --notes", UsageError);

  auto missing_file = quick_train_options(dir, "m.json");
  missing_file.diagnoses_path = dir.file("absent.csv");
  CHECK_THROWS_WITH_AS(run_train(missing_file, log),
                       ("ingest: cannot open file: " + dir.file("absent.csv")).c_str(),
                       DataError);
}

TEST_CASE("run_eval reports the full metric suite") {
  TempDir dir;
  make_dataset(dir);
  std::ostringstream train_log;
  run_train(quick_train_options(dir, "model.json"), train_log);

  EvalOptions options;
  options.model_path = dir.file("model.json");
  options.diagnoses_path = dir.file("diagnoses.csv");
  options.k = 3;
  options.n_candidates = 8;
  options.seed = 1;
  options.out_path = dir.file("report.json");

  std::ostringstream log;
  std::string text = run_eval(options, log);
  CHECK(slurp(dir.file("report.json")) == text);

  auto report = nlohmann::json::parse(text);
  for (const char* split : {"train", "validation", "test"}) {
    double acc = report.at("accuracy").at(split).get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(report.at("macro_f1").at(split).is_number());
  }
  CHECK(report.at("micro_f1").is_number());
  double auc = report.at("auc").get<double>();
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);
  CHECK(report.at("hit_ratio_at_k").get<double>() >= 0.0);
  CHECK(report.at("k") == 3);
  CHECK(report.at("counts").at("n_pos").get<int>() > 0);
  CHECK(report.at("counts").at("n_neg").get<int>() > 0);
  CHECK(report.at("counts").at("n_cases").get<int>() > 0);
  CHECK(log.str().find("eval: test_acc") != std::string::npos);
}

TEST_CASE("run_eval is deterministic and honors its own seed") {
  TempDir dir;
  make_dataset(dir);
  std::ostringstream train_log;
  run_train(quick_train_options(dir, "model.json"), train_log);

  EvalOptions options;
  options.model_path = dir.file("model.json");
  options.diagnoses_path = dir.file("diagnoses.csv");
  options.k = 3;
  options.n_candidates = 8;
  options.seed = 9;

  std::ostringstream log_a, log_b;
  CHECK(run_eval(options, log_a) == run_eval(options, log_b));
}

TEST_CASE("run_eval rescores a triple model through the model vocabulary") {
  TempDir dir;
  make_dataset(dir);
  auto train_options = quick_train_options(dir, "dhf.json");
  train_options.kind = ModelKind::Dhf;
  train_options.notes_path = dir.file("notes.csv");
  train_options.lexicon_path = dir.file("lexicon.tsv");
  std::ostringstream train_log;
  run_train(train_options, train_log);

  EvalOptions options;
  options.model_path = dir.file("dhf.json");
  options.diagnoses_path = dir.file("diagnoses.csv");
  options.notes_path = dir.file("notes.csv");
  options.lexicon_path = dir.file("lexicon.tsv");
  options.k = 3;
  options.n_candidates = 8;

  std::ostringstream log;
  auto report = nlohmann::json::parse(run_eval(options, log));
  CHECK(report.at("auc").get<double>() > 0.0);

  EvalOptions no_notes = options;
  no_notes.notes_path.clear();
  CHECK_THROWS_WITH_AS(run_eval(no_notes, log), "eval: a dhf model requires --notes",
                       UsageError);
}

TEST_CASE("run_eval rejects data the model has never seen") {
  TempDir dir;
  make_dataset(dir);
  std::ostringstream train_log;
  run_train(quick_train_options(dir, "model.json"), train_log);

  // Append a row with a foreign subject to an otherwise matching file.
  std::string rows = slurp(dir.file("diagnoses.csv"));
  std::ofstream out(dir.file("tainted.csv"), std::ios::binary);
  out << rows << "ZZZ,H99,C01\n";
  out.close();

  EvalOptions options;
  options.model_path = dir.file("model.json");
  options.diagnoses_path = dir.file("tainted.csv");
  options.n_candidates = 8;

  std::ostringstream log;
  CHECK_THROWS_WITH_AS(run_eval(options, log),
                       "eval: vocabulary mismatch: subject 'ZZZ' is not in the model",
                       DataError);
}

TEST_CASE("run_eval validates options and propagates stage errors") {
  TempDir dir;
  make_dataset(dir);
  std::ostringstream train_log;
  run_train(quick_train_options(dir, "model.json"), train_log);
  std::ostringstream log;

  EvalOptions no_model;
  no_model.diagnoses_path = dir.file("diagnoses.csv");
  CHECK_THROWS_WITH_AS(run_eval(no_model, log), "eval: --model is required", UsageError);

  EvalOptions no_data;
  no_data.model_path = dir.file("model.json");
  CHECK_THROWS_WITH_AS(run_eval(no_data, log), "eval: --diagnoses is required", UsageError);

  EvalOptions zero_k;
  zero_k.model_path = dir.file("model.json");
  zero_k.diagnoses_path = dir.file("diagnoses.csv");
  zero_k.k = 0;
  CHECK_THROWS_WITH_AS(run_eval(zero_k, log), "eval: k must be positive", UsageError);

  // 100 default candidates cannot fit in a 12-code vocabulary; the sampling
  // stage's complaint arrives with its stage prefix attached.
  EvalOptions too_many;
  too_many.model_path = dir.file("model.json");
  too_many.diagnoses_path = dir.file("diagnoses.csv");
  CHECK_THROWS_WITH_AS(run_eval(too_many, log),
                       "sampling: n_candidates exceeds the number of codes", UsageError);
}
