#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace comorec {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Dhf ? "dhf" : "ncf";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "ncf") return ModelKind::Ncf;
  if (name == "dhf") return ModelKind::Dhf;
  throw UsageError("unknown model kind: " + name + " (expected ncf or dhf)");
}

Model make_model(ModelKind kind, Encoder subjects, Encoder codes, Encoder symptoms,
                 uint32_t embedding_dim, std::span<const uint32_t> hidden_sizes,
                 uint64_t seed) {
  if (embedding_dim < 1) {
    throw UsageError("embedding dimension must be positive");
  }
  if (subjects.size() == 0 || codes.size() == 0) {
    throw UsageError("cannot build a model over an empty vocabulary");
  }
  if (kind == ModelKind::Dhf && symptoms.size() == 0) {
    throw UsageError("a triple model needs a non-empty symptom vocabulary");
  }
  for (uint32_t h : hidden_sizes) {
    if (h < 1) throw UsageError("hidden layer sizes must be positive");
  }

  Model model;
  model.kind = kind;
  model.embedding_dim = embedding_dim;
  model.hidden_sizes.assign(hidden_sizes.begin(), hidden_sizes.end());
  model.subjects = std::move(subjects);
  model.codes = std::move(codes);
  if (kind == ModelKind::Dhf) {
    model.symptoms = std::move(symptoms);
  }

  // Fixed draw order — subject table, code table, symptom table, then the
  // layers top to bottom — so one seed determines every parameter.
  Rng rng(seed);
  model.net.embeddings.push_back(nn::make_embedding(model.subjects.size(), embedding_dim, rng));
  model.net.embeddings.push_back(nn::make_embedding(model.codes.size(), embedding_dim, rng));
  if (kind == ModelKind::Dhf) {
    model.net.embeddings.push_back(nn::make_embedding(model.symptoms.size(), embedding_dim, rng));
  }
  uint32_t width = model.net.concat_dim();
  for (uint32_t h : hidden_sizes) {
    model.net.layers.push_back(nn::make_dense(width, h, nn::Activation::Relu, rng));
    width = h;
  }
  model.net.layers.push_back(nn::make_dense(width, 1, nn::Activation::Sigmoid, rng));
  model.net.validate();
  return model;
}

namespace {

nn::Example to_example(const Model& model, const Interaction& record, size_t position) {
  nn::Example ex;
  ex.idx[0] = record.subject;
  ex.idx[1] = record.code;
  if (model.kind == ModelKind::Dhf) {
    if (!record.symptom.has_value()) {
      throw UsageError("record " + std::to_string(position) +
                       " has no symptom index but the model is a triple model");
    }
    ex.idx[2] = *record.symptom;
  }
  ex.label = static_cast<double>(record.label);
  return ex;
}

std::vector<nn::Example> to_examples(const Model& model, std::span<const Interaction> records) {
  std::vector<nn::Example> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); i++) {
    out.push_back(to_example(model, records[i], i));
  }
  return out;
}

}  // namespace

double predict(const Model& model, uint32_t subject, uint32_t code,
               std::optional<uint32_t> symptom) {
  std::array<uint32_t, 3> idx = {subject, code, 0};
  if (model.kind == ModelKind::Dhf) {
    if (!symptom.has_value()) {
      throw UsageError("a triple model requires a symptom index to score");
    }
    idx[2] = *symptom;
  }
  return model.net.forward(std::span<const uint32_t>(idx.data(), model.arity()));
}

std::vector<double> predict_batch(const Model& model, std::span<const Interaction> records) {
  return nn::forward_batch(model.net, to_examples(model, records));
}

std::vector<uint8_t> classify(const Model& model, std::span<const Interaction> records,
                              double threshold) {
  std::vector<double> probs = predict_batch(model, records);
  std::vector<uint8_t> out(probs.size());
  for (size_t i = 0; i < probs.size(); i++) {
    out[i] = probs[i] >= threshold ? 1 : 0;
  }
  return out;
}

std::vector<ScoredCode> score_candidates(const Model& model, uint32_t subject,
                                         std::span<const uint32_t> candidate_codes,
                                         std::optional<uint32_t> symptom) {
  if (candidate_codes.empty()) {
    throw UsageError("cannot rank an empty candidate list");
  }
  std::vector<ScoredCode> out;
  out.reserve(candidate_codes.size());
  for (uint32_t code : candidate_codes) {
    out.push_back({code, predict(model, subject, code, symptom)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredCode& a, const ScoredCode& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.code < b.code;
  });
  return out;
}

void TrainConfig::validate() const {
  if (embedding_dim < 1) throw UsageError("embedding_dim must be positive");
  for (uint32_t h : hidden_sizes) {
    if (h < 1) throw UsageError("hidden layer sizes must be positive");
  }
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be positive and finite");
  }
  if (neg_ratio < 1) throw UsageError("neg_ratio must be positive");
}

namespace {

std::vector<uint8_t> labels_of(std::span<const Interaction> records) {
  std::vector<uint8_t> out(records.size());
  for (size_t i = 0; i < records.size(); i++) out[i] = records[i].label;
  return out;
}

double accuracy_on(const Model& model, std::span<const nn::Example> examples,
                   std::span<const uint8_t> labels) {
  std::vector<double> probs = nn::forward_batch(model.net, examples);
  std::vector<uint8_t> predicted(probs.size());
  for (size_t i = 0; i < probs.size(); i++) {
    predicted[i] = probs[i] >= kDecisionThreshold ? 1 : 0;
  }
  return metrics::accuracy(labels, predicted);
}

}  // namespace

TrainHistory train(Model& model, std::span<const Interaction> train_set,
                   std::span<const Interaction> validation_set, const TrainConfig& config) {
  config.validate();
  model.net.validate();
  if (train_set.empty()) throw UsageError("training set is empty");
  if (validation_set.empty()) throw UsageError("validation set is empty");

  std::vector<nn::Example> train_examples = to_examples(model, train_set);
  std::vector<nn::Example> val_examples = to_examples(model, validation_set);
  std::vector<uint8_t> train_labels = labels_of(train_set);
  std::vector<uint8_t> val_labels = labels_of(validation_set);

  TrainHistory history;
  if (config.epochs == 0) {
    return history;  // initialized model, nothing trained
  }

  Rng shuffle_rng(config.seed);
  std::vector<double> params = nn::copy_params(model.net);
  nn::AdamState adam(params.size(), config.learning_rate);
  nn::Gradients grads = nn::zero_gradients(model.net);

  std::vector<size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<nn::Example> batch;
  batch.reserve(config.batch_size);

  double best_validation = -1.0;
  uint32_t epochs_since_best = 0;

  for (uint32_t epoch = 1; epoch <= config.epochs; epoch++) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (size_t i = start; i < end; i++) {
        batch.push_back(train_examples[order[i]]);
      }
      double loss = nn::backward(model.net, batch, grads);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged (non-finite loss at epoch " +
                           std::to_string(epoch) + "); try a lower learning rate");
      }
      loss_sum += loss * static_cast<double>(batch.size());
      std::vector<double> flat = nn::flatten_gradients(model.net, grads);
      adam.step(params, flat);
      nn::set_params(model.net, params);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_examples.size());
    stats.train_accuracy = accuracy_on(model, train_examples, train_labels);
    stats.validation_accuracy = accuracy_on(model, val_examples, val_labels);
    history.epochs.push_back(stats);

    if (config.early_stopping_patience > 0) {
      if (stats.validation_accuracy > best_validation) {
        best_validation = stats.validation_accuracy;
        epochs_since_best = 0;
      } else {
        epochs_since_best++;
        if (epochs_since_best >= config.early_stopping_patience) break;
      }
    }
  }
  return history;
}

namespace {

constexpr int kFormatVersion = 1;

json table_to_json(const nn::EmbeddingTable& table) {
  json rows = json::array();
  for (uint32_t r = 0; r < table.rows; r++) {
    auto row = table.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

std::string activation_name(nn::Activation a) {
  switch (a) {
    case nn::Activation::Identity: return "identity";
    case nn::Activation::Relu: return "relu";
    case nn::Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

nn::Activation activation_from(const std::string& name, const std::string& origin) {
  if (name == "identity") return nn::Activation::Identity;
  if (name == "relu") return nn::Activation::Relu;
  if (name == "sigmoid") return nn::Activation::Sigmoid;
  throw DataError(origin + ": unknown activation '" + name + "'");
}

json encoder_to_json(const Encoder& encoder) {
  return json(encoder.ids());
}

Encoder encoder_from(const json& ids, const std::string& origin, const char* which) {
  Encoder encoder;
  for (size_t i = 0; i < ids.size(); i++) {
    const std::string raw = ids[i].get<std::string>();
    if (encoder.add(raw) != i) {
      throw DataError(origin + ": duplicate identifier '" + raw + "' in " + which + " encoder");
    }
  }
  return encoder;
}

nn::EmbeddingTable table_from(const json& rows, uint32_t expected_rows, uint32_t dim,
                              const std::string& origin, const char* which) {
  if (!rows.is_array() || rows.size() != expected_rows) {
    throw DataError(origin + ": " + which + " embedding expects " +
                    std::to_string(expected_rows) + " rows");
  }
  nn::EmbeddingTable table;
  table.rows = expected_rows;
  table.dim = dim;
  table.data.reserve(static_cast<size_t>(expected_rows) * dim);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != dim) {
      throw DataError(origin + ": " + which + " embedding rows must have " +
                      std::to_string(dim) + " entries");
    }
    for (const auto& v : row) {
      table.data.push_back(v.get<double>());
    }
  }
  return table;
}

}  // namespace

std::string model_to_json(const Model& model) {
  for (double p : nn::copy_params(model.net)) {
    if (!std::isfinite(p)) {
      throw NumericError("model contains non-finite parameters; refusing to serialize");
    }
  }

  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model_kind"] = to_string(model.kind);
  doc["embedding_dim"] = model.embedding_dim;
  doc["hidden_sizes"] = model.hidden_sizes;
  doc["vocab_sizes"] = {
      {"subjects", model.subjects.size()},
      {"codes", model.codes.size()},
      {"symptoms", model.symptoms.size()},
  };
  doc["encoders"] = {
      {"subjects", encoder_to_json(model.subjects)},
      {"codes", encoder_to_json(model.codes)},
      {"symptoms", encoder_to_json(model.symptoms)},
  };

  json params;
  params["subject_embedding"] = table_to_json(model.net.embeddings[0]);
  params["code_embedding"] = table_to_json(model.net.embeddings[1]);
  if (model.kind == ModelKind::Dhf) {
    params["symptom_embedding"] = table_to_json(model.net.embeddings[2]);
  }
  json layers = json::array();
  for (const auto& layer : model.net.layers) {
    json weights = json::array();
    for (uint32_t j = 0; j < layer.out; j++) {
      const double* w = layer.weights.data() + static_cast<size_t>(j) * layer.in;
      weights.push_back(json(std::vector<double>(w, w + layer.in)));
    }
    layers.push_back({
        {"activation", activation_name(layer.activation)},
        {"weights", weights},
        {"bias", layer.bias},
    });
  }
  params["layers"] = layers;
  doc["parameters"] = params;

  return doc.dump(2) + "\n";
}

Model model_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(origin + ": corrupt model file (" + e.what() + ")");
  }

  try {
    if (!doc.is_object()) {
      throw DataError(origin + ": corrupt model file (not a JSON object)");
    }
    int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw DataError(origin + ": unsupported model format version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
    }

    Model model;
    const std::string kind = doc.at("model_kind").get<std::string>();
    if (kind == "ncf") {
      model.kind = ModelKind::Ncf;
    } else if (kind == "dhf") {
      model.kind = ModelKind::Dhf;
    } else {
      throw DataError(origin + ": unknown model kind '" + kind + "'");
    }

    model.embedding_dim = doc.at("embedding_dim").get<uint32_t>();
    if (model.embedding_dim < 1) {
      throw DataError(origin + ": embedding_dim must be positive");
    }
    model.hidden_sizes = doc.at("hidden_sizes").get<std::vector<uint32_t>>();

    const json& encoders = doc.at("encoders");
    model.subjects = encoder_from(encoders.at("subjects"), origin, "subject");
    model.codes = encoder_from(encoders.at("codes"), origin, "code");
    model.symptoms = encoder_from(encoders.at("symptoms"), origin, "symptom");

    const json& vocab = doc.at("vocab_sizes");
    if (vocab.at("subjects").get<uint32_t>() != model.subjects.size() ||
        vocab.at("codes").get<uint32_t>() != model.codes.size() ||
        vocab.at("symptoms").get<uint32_t>() != model.symptoms.size()) {
      throw DataError(origin + ": vocab_sizes disagree with the encoder tables");
    }
    if (model.subjects.size() == 0 || model.codes.size() == 0) {
      throw DataError(origin + ": model has an empty vocabulary");
    }
    if (model.kind == ModelKind::Dhf && model.symptoms.size() == 0) {
      throw DataError(origin + ": triple model has no symptom vocabulary");
    }

    const json& params = doc.at("parameters");
    model.net.embeddings.push_back(table_from(params.at("subject_embedding"),
                                              model.subjects.size(), model.embedding_dim,
                                              origin, "subject"));
    model.net.embeddings.push_back(table_from(params.at("code_embedding"), model.codes.size(),
                                              model.embedding_dim, origin, "code"));
    if (model.kind == ModelKind::Dhf) {
      model.net.embeddings.push_back(table_from(params.at("symptom_embedding"),
                                                model.symptoms.size(), model.embedding_dim,
                                                origin, "symptom"));
    }

    const json& layers = params.at("layers");
    if (!layers.is_array() || layers.size() != model.hidden_sizes.size() + 1) {
      throw DataError(origin + ": expected " + std::to_string(model.hidden_sizes.size() + 1) +
                      " layers");
    }
    uint32_t width = model.net.concat_dim();
    for (size_t l = 0; l < layers.size(); l++) {
      const json& jl = layers[l];
      uint32_t out = l < model.hidden_sizes.size() ? model.hidden_sizes[l] : 1;
      nn::DenseLayer layer;
      layer.in = width;
      layer.out = out;
      layer.activation = activation_from(jl.at("activation").get<std::string>(), origin);
      const json& weights = jl.at("weights");
      if (!weights.is_array() || weights.size() != out) {
        throw DataError(origin + ": layer " + std::to_string(l) + " expects " +
                        std::to_string(out) + " weight rows");
      }
      layer.weights.reserve(static_cast<size_t>(out) * width);
      for (const auto& row : weights) {
        if (!row.is_array() || row.size() != width) {
          throw DataError(origin + ": layer " + std::to_string(l) + " weight rows must have " +
                          std::to_string(width) + " entries");
        }
        for (const auto& v : row) {
          layer.weights.push_back(v.get<double>());
        }
      }
      layer.bias = jl.at("bias").get<std::vector<double>>();
      if (layer.bias.size() != out) {
        throw DataError(origin + ": layer " + std::to_string(l) + " bias must have " +
                        std::to_string(out) + " entries");
      }
      width = out;
      model.net.layers.push_back(std::move(layer));
    }

    try {
      model.net.validate();
    } catch (const UsageError& e) {
      throw DataError(origin + ": inconsistent model shapes (" + e.what() + ")");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(origin + ": corrupt model file (" + e.what() + ")");
  }
}

void save_model(const Model& model, const std::string& path) {
  std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file: " + path);
  }
  out << text;
  out.flush();
  if (!out) {
    throw DataError("failed while writing file: " + path);
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str(), path);
}

}  // namespace comorec
