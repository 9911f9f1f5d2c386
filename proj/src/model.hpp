#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "nn.hpp"

namespace comorec {

enum class ModelKind { Ncf, Dhf };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);  // throws UsageError

// Probability >= threshold reads as class 1.
inline constexpr double kDecisionThreshold = 0.5;

// A trained scorer: embedding tables + MLP plus the encoders that map raw
// identifiers to table rows. The pair flavour embeds (subject, code); the
// triple flavour adds a symptom table in front of the same tower.
struct Model {
  ModelKind kind = ModelKind::Ncf;
  uint32_t embedding_dim = 8;
  std::vector<uint32_t> hidden_sizes;
  nn::EmbeddingNet net;
  Encoder subjects;
  Encoder codes;
  Encoder symptoms;  // empty unless kind == Dhf

  size_t arity() const { return kind == ModelKind::Dhf ? 3 : 2; }
};

// Fresh model with embeddings ~ U[-0.05, 0.05] and Glorot-uniform layers,
// drawn in a fixed order so one seed pins every parameter.
Model make_model(ModelKind kind, Encoder subjects, Encoder codes, Encoder symptoms,
                 uint32_t embedding_dim, std::span<const uint32_t> hidden_sizes,
                 uint64_t seed);

// Probability of co-occurrence for encoded indices. A triple model requires
// `symptom`; a pair model ignores it.
double predict(const Model& model, uint32_t subject, uint32_t code,
               std::optional<uint32_t> symptom = std::nullopt);

std::vector<double> predict_batch(const Model& model, std::span<const Interaction> records);

// predict_batch thresholded at `threshold`.
std::vector<uint8_t> classify(const Model& model, std::span<const Interaction> records,
                              double threshold = kDecisionThreshold);

struct ScoredCode {
  uint32_t code = 0;
  double probability = 0.0;
};

// Scores every candidate for one subject and sorts by probability
// descending, ties broken by code index ascending.
std::vector<ScoredCode> score_candidates(const Model& model, uint32_t subject,
                                         std::span<const uint32_t> candidate_codes,
                                         std::optional<uint32_t> symptom = std::nullopt);

struct TrainConfig {
  uint32_t embedding_dim = 8;
  std::vector<uint32_t> hidden_sizes = {64, 32};
  uint32_t epochs = 20;
  uint32_t batch_size = 128;
  double learning_rate = 1e-3;
  uint32_t neg_ratio = 4;  // consumed by the pipeline when drawing negatives
  uint64_t seed = 0;
  // Stop after this many epochs without a validation-accuracy improvement;
  // 0 leaves early stopping off and the final-epoch model is kept.
  uint32_t early_stopping_patience = 0;

  void validate() const;  // throws UsageError
};

struct EpochStats {
  uint32_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// Mini-batch Adam on mean binary cross-entropy with a seeded shuffle per
// epoch. Mutates the model in place and reports one stats row per epoch.
TrainHistory train(Model& model, std::span<const Interaction> train_set,
                   std::span<const Interaction> validation_set, const TrainConfig& config);

// JSON persistence; load(save(m)) restores every parameter bit-exactly.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text, const std::string& origin);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace comorec
