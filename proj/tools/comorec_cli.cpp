// Command-line front end. All work happens behind the C API; this file only
// turns flags into the JSON run configs the library consumes (config file
// first, explicit flags win) and maps statuses to exit codes.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "comorec.h"

namespace {

using nlohmann::json;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Base config from --config (if any), parsed so flags can overwrite keys.
// Strict key/type validation happens inside the library.
int load_base_config(const std::string& config_path, json& base) {
  base = json::object();
  if (config_path.empty()) return 0;
  auto text = read_file(config_path);
  if (!text.has_value()) {
    std::fprintf(stderr, "error: cannot open config file: %s\n", config_path.c_str());
    return COMOREC_ERROR_USAGE;
  }
  try {
    base = json::parse(*text);
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s: invalid JSON (%s)\n", config_path.c_str(), e.what());
    return COMOREC_ERROR_USAGE;
  }
  if (!base.is_object()) {
    std::fprintf(stderr, "error: %s: config must be a JSON object\n", config_path.c_str());
    return COMOREC_ERROR_USAGE;
  }
  return 0;
}

int report_library_error(int rc) {
  std::fprintf(stderr, "error: %s\n", comorec_last_error());
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comorec: subject-disease co-occurrence prediction"};
  app.set_version_flag("--version", comorec_version());
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Generate a synthetic planted-cluster dataset");
  std::string synth_config;
  std::string synth_out;
  synth->add_option("--config", synth_config, "JSON config file");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // --- train ---
  auto* train = app.add_subcommand("train", "Train a model from diagnosis (and note) CSVs");
  std::string train_config, train_kind, train_diagnoses, train_notes, train_lexicon, train_out;
  uint64_t train_top_k = 0, train_max_notes = 0, train_seed = 0;
  uint32_t train_neg_ratio = 0, train_epochs = 0, train_batch = 0, train_dim = 0, train_patience = 0;
  double train_lr = 0.0, train_tf = 0.0, train_vf = 0.0, train_sf = 0.0;
  std::vector<uint32_t> train_hidden;
  train->add_option("--config", train_config, "JSON config file; flags override its keys");
  train->add_option("--model", train_kind, "Model kind")->check(CLI::IsMember({"ncf", "dhf"}));
  train->add_option("--diagnoses", train_diagnoses, "Diagnoses CSV");
  train->add_option("--notes", train_notes, "Notes CSV (required for dhf)");
  train->add_option("--lexicon", train_lexicon, "Lexicon TSV (built-in vocabulary when omitted)");
  train->add_option("--top-k-codes", train_top_k, "Keep only the k most frequent codes");
  train->add_option("--max-notes", train_max_notes, "Cap the number of notes ingested");
  train->add_option("--neg-ratio", train_neg_ratio, "Negatives per positive (e.g. 10, 4, 2)");
  train->add_option("--seed", train_seed, "Master seed for the whole run");
  train->add_option("--out", train_out, "Model JSON output path");
  train->add_option("--embedding-dim", train_dim, "Embedding dimension");
  train->add_option("--hidden-sizes", train_hidden, "Hidden layer widths, e.g. 64,32")
      ->delimiter(',');
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("--batch-size", train_batch, "Mini-batch size");
  train->add_option("--learning-rate", train_lr, "Adam learning rate");
  train->add_option("--early-stopping-patience", train_patience,
                    "Stop after this many epochs without validation improvement (0 = off)");
  train->add_option("--train-fraction", train_tf, "Train split fraction");
  train->add_option("--validation-fraction", train_vf, "Validation split fraction");
  train->add_option("--test-fraction", train_sf, "Test split fraction");

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model and write a report");
  std::string eval_config, eval_model, eval_diagnoses, eval_notes, eval_lexicon, eval_out;
  uint64_t eval_top_k = 0, eval_max_notes = 0, eval_seed = 0;
  uint32_t eval_neg_ratio = 0, eval_k = 0, eval_candidates = 0;
  double eval_tf = 0.0, eval_vf = 0.0, eval_sf = 0.0;
  eval->add_option("--config", eval_config, "JSON config file; flags override its keys");
  eval->add_option("--model", eval_model, "Model JSON written by train");
  eval->add_option("--diagnoses", eval_diagnoses, "Diagnoses CSV");
  eval->add_option("--notes", eval_notes, "Notes CSV (required for a dhf model)");
  eval->add_option("--lexicon", eval_lexicon, "Lexicon TSV (built-in vocabulary when omitted)");
  eval->add_option("--top-k-codes", eval_top_k, "Keep only the k most frequent codes");
  eval->add_option("--max-notes", eval_max_notes, "Cap the number of notes ingested");
  eval->add_option("--neg-ratio", eval_neg_ratio, "Negatives per positive");
  eval->add_option("--seed", eval_seed, "Master seed (match train for the same dataset)");
  eval->add_option("--k", eval_k, "Hit-ratio cutoff");
  eval->add_option("--n-candidates", eval_candidates, "Candidate list size per hit-ratio case");
  eval->add_option("--out", eval_out, "Report JSON output path (stdout when omitted)");
  eval->add_option("--train-fraction", eval_tf, "Train split fraction");
  eval->add_option("--validation-fraction", eval_vf, "Validation split fraction");
  eval->add_option("--test-fraction", eval_sf, "Test split fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : COMOREC_ERROR_USAGE;
  }

  if (synth->parsed()) {
    std::string config_text = "{}";
    if (!synth_config.empty()) {
      auto text = read_file(synth_config);
      if (!text.has_value()) {
        std::fprintf(stderr, "error: cannot open config file: %s\n", synth_config.c_str());
        return COMOREC_ERROR_USAGE;
      }
      config_text = *text;
    }
    int rc = comorec_synth(config_text.c_str(), synth_out.c_str());
    return rc == COMOREC_OK ? 0 : report_library_error(rc);
  }

  if (train->parsed()) {
    json config;
    if (int rc = load_base_config(train_config, config)) return rc;
    if (train->count("--model")) config["model"] = train_kind;
    if (train->count("--diagnoses")) config["diagnoses"] = train_diagnoses;
    if (train->count("--notes")) config["notes"] = train_notes;
    if (train->count("--lexicon")) config["lexicon"] = train_lexicon;
    if (train->count("--top-k-codes")) config["top_k_codes"] = train_top_k;
    if (train->count("--max-notes")) config["max_notes"] = train_max_notes;
    if (train->count("--neg-ratio")) config["neg_ratio"] = train_neg_ratio;
    if (train->count("--seed")) config["seed"] = train_seed;
    if (train->count("--out")) config["out"] = train_out;
    if (train->count("--embedding-dim")) config["embedding_dim"] = train_dim;
    if (train->count("--hidden-sizes")) config["hidden_sizes"] = train_hidden;
    if (train->count("--epochs")) config["epochs"] = train_epochs;
    if (train->count("--batch-size")) config["batch_size"] = train_batch;
    if (train->count("--learning-rate")) config["learning_rate"] = train_lr;
    if (train->count("--early-stopping-patience")) {
      config["early_stopping_patience"] = train_patience;
    }
    if (train->count("--train-fraction")) config["train_fraction"] = train_tf;
    if (train->count("--validation-fraction")) config["validation_fraction"] = train_vf;
    if (train->count("--test-fraction")) config["test_fraction"] = train_sf;
    int rc = comorec_train(config.dump().c_str());
    return rc == COMOREC_OK ? 0 : report_library_error(rc);
  }

  if (eval->parsed()) {
    json config;
    if (int rc = load_base_config(eval_config, config)) return rc;
    if (eval->count("--model")) config["model"] = eval_model;
    if (eval->count("--diagnoses")) config["diagnoses"] = eval_diagnoses;
    if (eval->count("--notes")) config["notes"] = eval_notes;
    if (eval->count("--lexicon")) config["lexicon"] = eval_lexicon;
    if (eval->count("--top-k-codes")) config["top_k_codes"] = eval_top_k;
    if (eval->count("--max-notes")) config["max_notes"] = eval_max_notes;
    if (eval->count("--neg-ratio")) config["neg_ratio"] = eval_neg_ratio;
    if (eval->count("--seed")) config["seed"] = eval_seed;
    if (eval->count("--k")) config["k"] = eval_k;
    if (eval->count("--n-candidates")) config["n_candidates"] = eval_candidates;
    if (eval->count("--out")) config["out"] = eval_out;
    if (eval->count("--train-fraction")) config["train_fraction"] = eval_tf;
    if (eval->count("--validation-fraction")) config["validation_fraction"] = eval_vf;
    if (eval->count("--test-fraction")) config["test_fraction"] = eval_sf;

    char* report = nullptr;
    int rc = comorec_eval(config.dump().c_str(), &report);
    if (rc != COMOREC_OK) return report_library_error(rc);
    if (config.value("out", std::string()).empty() && report != nullptr) {
      std::fputs(report, stdout);
    }
    comorec_string_free(report);
    return 0;
  }

  return COMOREC_ERROR_USAGE;  // unreachable: a subcommand is required
}
