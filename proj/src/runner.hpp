#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>

#include "model.hpp"
#include "synthetic.hpp"

namespace comorec::runner {

// Every stage that consumes randomness derives its own stream from the
// master seed with a distinct salt, so changing one stage's draws cannot
// silently shift another's.
inline constexpr uint64_t kSaltModelInit = 1;
inline constexpr uint64_t kSaltNegatives = 2;
inline constexpr uint64_t kSaltSplit = 3;
inline constexpr uint64_t kSaltShuffle = 4;
inline constexpr uint64_t kSaltHitRatio = 5;
inline constexpr uint64_t kSaltSymptomResolve = 6;

// Note categories never used for symptom extraction. Discharge summaries
// restate the whole stay — including the diagnoses themselves — so keeping
// them would leak the prediction target into the features.
const std::unordered_set<std::string>& default_excluded_categories();

struct TrainOptions {
  ModelKind kind = ModelKind::Ncf;
  std::string diagnoses_path;
  std::string notes_path;    // required for dhf
  std::string lexicon_path;  // built-in clinical vocabulary when empty
  std::optional<size_t> top_k_codes;
  std::optional<size_t> max_notes;
  TrainConfig train;  // train.seed is the master seed for the whole run
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::string out_path;
};

struct EvalOptions {
  std::string model_path;
  std::string diagnoses_path;
  std::string notes_path;    // required for a dhf model
  std::string lexicon_path;  // built-in when empty
  std::optional<size_t> top_k_codes;
  std::optional<size_t> max_notes;
  uint32_t neg_ratio = 4;
  uint64_t seed = 0;
  uint32_t k = 10;
  uint32_t n_candidates = 100;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::string out_path;  // empty: report returned but not written
};

// Strict JSON config parsing shared by the CLI (--config) and the C API.
// Unknown keys and ill-typed values are rejected with a UsageError naming
// the key; absent keys keep their defaults.
synthetic::SyntheticConfig parse_synth_config(const std::string& text, const std::string& origin);
TrainOptions parse_train_options(const std::string& text, const std::string& origin);
EvalOptions parse_eval_options(const std::string& text, const std::string& origin);

// Pipelines. Progress and dataset statistics go to `log` (the CLI passes
// stderr); results go to files and, for eval, the returned JSON string.
void run_synth(const synthetic::SyntheticConfig& config, const std::string& out_dir,
               std::ostream& log);
void run_train(const TrainOptions& options, std::ostream& log);
std::string run_eval(const EvalOptions& options, std::ostream& log);

// model.json -> model.history.json (sibling file for the per-epoch stats).
std::string history_path_for(const std::string& model_out_path);

}  // namespace comorec::runner
