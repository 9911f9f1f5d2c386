#include "runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "errors.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "notes.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace comorec::runner {

using nlohmann::json;

const std::unordered_set<std::string>& default_excluded_categories() {
  static const std::unordered_set<std::string> excluded = {"Discharge summary"};
  return excluded;
}

namespace {

// Re-throws module errors with the pipeline stage prepended, preserving the
// error class (and therefore the exit code).
template <typename F>
decltype(auto) with_stage(const char* stage, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const UsageError& e) {
    throw UsageError(std::string(stage) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  }
}

json parse_config_object(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(origin + ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) {
    throw UsageError(origin + ": config must be a JSON object");
  }
  return doc;
}

void reject_unknown_keys(const json& doc, std::initializer_list<const char*> known,
                         const std::string& origin) {
  for (const auto& item : doc.items()) {
    bool found = false;
    for (const char* key : known) {
      if (item.key() == key) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw UsageError(origin + ": unknown config key '" + item.key() + "'");
    }
  }
}

template <typename T>
void take(const json& doc, const char* key, T& out, const std::string& origin) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(origin + ": bad value for '" + key + "' (" + e.what() + ")");
  }
}

template <typename T>
void take_optional(const json& doc, const char* key, std::optional<T>& out,
                   const std::string& origin) {
  if (!doc.contains(key)) return;
  T value{};
  take(doc, key, value, origin);
  out = value;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
  return buf;
}

}  // namespace

synthetic::SyntheticConfig parse_synth_config(const std::string& text,
                                              const std::string& origin) {
  json doc = parse_config_object(text, origin);
  reject_unknown_keys(doc,
                      {"n_subjects", "n_codes", "n_clusters", "p_in", "p_out",
                       "symptoms_per_cluster", "symptom_noise", "seed"},
                      origin);
  synthetic::SyntheticConfig config;
  take(doc, "n_subjects", config.n_subjects, origin);
  take(doc, "n_codes", config.n_codes, origin);
  take(doc, "n_clusters", config.n_clusters, origin);
  take(doc, "p_in", config.p_in, origin);
  take(doc, "p_out", config.p_out, origin);
  take(doc, "symptoms_per_cluster", config.symptoms_per_cluster, origin);
  take(doc, "symptom_noise", config.symptom_noise, origin);
  take(doc, "seed", config.seed, origin);
  return config;
}

TrainOptions parse_train_options(const std::string& text, const std::string& origin) {
  json doc = parse_config_object(text, origin);
  reject_unknown_keys(doc,
                      {"model", "diagnoses", "notes", "lexicon", "top_k_codes", "max_notes",
                       "neg_ratio", "seed", "out", "embedding_dim", "hidden_sizes", "epochs",
                       "batch_size", "learning_rate", "early_stopping_patience",
                       "train_fraction", "validation_fraction", "test_fraction"},
                      origin);
  TrainOptions options;
  std::string kind;
  take(doc, "model", kind, origin);
  if (!kind.empty()) options.kind = parse_model_kind(kind);
  take(doc, "diagnoses", options.diagnoses_path, origin);
  take(doc, "notes", options.notes_path, origin);
  take(doc, "lexicon", options.lexicon_path, origin);
  take_optional(doc, "top_k_codes", options.top_k_codes, origin);
  take_optional(doc, "max_notes", options.max_notes, origin);
  take(doc, "neg_ratio", options.train.neg_ratio, origin);
  take(doc, "seed", options.train.seed, origin);
  take(doc, "out", options.out_path, origin);
  take(doc, "embedding_dim", options.train.embedding_dim, origin);
  take(doc, "hidden_sizes", options.train.hidden_sizes, origin);
  take(doc, "epochs", options.train.epochs, origin);
  take(doc, "batch_size", options.train.batch_size, origin);
  take(doc, "learning_rate", options.train.learning_rate, origin);
  take(doc, "early_stopping_patience", options.train.early_stopping_patience, origin);
  take(doc, "train_fraction", options.train_fraction, origin);
  take(doc, "validation_fraction", options.validation_fraction, origin);
  take(doc, "test_fraction", options.test_fraction, origin);
  return options;
}

EvalOptions parse_eval_options(const std::string& text, const std::string& origin) {
  json doc = parse_config_object(text, origin);
  reject_unknown_keys(doc,
                      {"model", "diagnoses", "notes", "lexicon", "top_k_codes", "max_notes",
                       "neg_ratio", "seed", "out", "k", "n_candidates", "train_fraction",
                       "validation_fraction", "test_fraction"},
                      origin);
  EvalOptions options;
  take(doc, "model", options.model_path, origin);
  take(doc, "diagnoses", options.diagnoses_path, origin);
  take(doc, "notes", options.notes_path, origin);
  take(doc, "lexicon", options.lexicon_path, origin);
  take_optional(doc, "top_k_codes", options.top_k_codes, origin);
  take_optional(doc, "max_notes", options.max_notes, origin);
  take(doc, "neg_ratio", options.neg_ratio, origin);
  take(doc, "seed", options.seed, origin);
  take(doc, "out", options.out_path, origin);
  take(doc, "k", options.k, origin);
  take(doc, "n_candidates", options.n_candidates, origin);
  take(doc, "train_fraction", options.train_fraction, origin);
  take(doc, "validation_fraction", options.validation_fraction, origin);
  take(doc, "test_fraction", options.test_fraction, origin);
  return options;
}

void run_synth(const synthetic::SyntheticConfig& config, const std::string& out_dir,
               std::ostream& log) {
  if (out_dir.empty()) {
    throw UsageError("synth: an output directory is required");
  }
  synthetic::SyntheticData data = with_stage("synth", [&] { return synthetic::generate(config); });
  with_stage("synth", [&] { synthetic::write_files(data, out_dir); });
  log << "synth: wrote " << data.diagnoses.rows.size() << " diagnosis rows and "
      << data.notes.rows.size() << " note rows to " << out_dir << "\n";
}

namespace {

struct AssembledData {
  InteractionSet dataset;            // positives then generated negatives
  InteractionSet positives;          // the label-1 records the model trains on
  notes::SubjectSymptomTable symptoms;  // filled for dhf only
};

InteractionSet positives_of(const InteractionSet& dataset) {
  InteractionSet out;
  out.n_subjects = dataset.n_subjects;
  out.n_codes = dataset.n_codes;
  out.n_symptoms = dataset.n_symptoms;
  for (const auto& record : dataset.records) {
    if (record.label == 1) out.records.push_back(record);
  }
  return out;
}

// Symptom features for evaluation: terms are mapped through the *model's*
// symptom vocabulary, so an unseen term is a hard mismatch, not a silent
// re-fit that would scramble every embedding row.
notes::SubjectSymptomTable remap_symptoms(const std::vector<ingest::NoteRow>& note_rows,
                                          const notes::Lexicon& lexicon, const Model& model) {
  notes::SubjectSymptomTable table;
  table.n_symptoms = model.symptoms.size();
  std::unordered_map<uint32_t, std::unordered_set<uint32_t>> seen;
  for (const auto& row : note_rows) {
    if (!model.subjects.contains(row.subject_id)) {
      table.n_skipped_notes++;
      continue;
    }
    uint32_t subject = model.subjects.encode(row.subject_id);
    for (const auto& [term, kind] : notes::extract_terms(notes::tokenize(row.text), lexicon)) {
      (void)kind;
      if (!model.symptoms.contains(term)) {
        throw DataError("vocabulary mismatch: symptom '" + term + "' is not in the model");
      }
      uint32_t index = model.symptoms.encode(term);
      if (seen[subject].insert(index).second) {
        table.by_subject[subject].push_back(index);
      }
    }
  }
  return table;
}

void log_diagnoses(const ingest::DiagnosesTable& table, std::ostream& log) {
  if (table.n_dropped > 0) {
    log << "ingest: dropped " << table.n_dropped << " diagnosis rows with blank fields\n";
  }
}

void log_notes(const ingest::NotesTable& table, std::ostream& log) {
  log << "notes: " << table.rows.size() << " rows kept, " << table.n_excluded
      << " excluded by category, " << table.n_dropped << " dropped as blank\n";
}

}  // namespace

void run_train(const TrainOptions& options, std::ostream& log) {
  if (options.diagnoses_path.empty()) throw UsageError("train: --diagnoses is required");
  if (options.out_path.empty()) throw UsageError("train: --out is required");
  options.train.validate();
  uint64_t master = options.train.seed;

  auto diagnoses =
      with_stage("ingest", [&] { return ingest::load_diagnoses(options.diagnoses_path); });
  log_diagnoses(diagnoses, log);
  std::vector<ingest::DiagnosisRow> rows = std::move(diagnoses.rows);
  if (options.top_k_codes.has_value()) {
    auto filtered =
        with_stage("ingest", [&] { return ingest::filter_top_k_codes(rows, *options.top_k_codes); });
    log << "ingest: top-" << *options.top_k_codes << " codes keep " << filtered.rows.size()
        << " of " << rows.size() << " rows (coverage " << percent(filtered.coverage) << ")\n";
    rows = std::move(filtered.rows);
  }
  auto positives = with_stage("ingest", [&] { return ingest::build_positive_set(rows); });
  log << "ingest: " << positives.subjects.size() << " subjects, " << positives.codes.size()
      << " codes, " << positives.interactions.size() << " positive pairs\n";

  InteractionSet dataset;
  Encoder symptom_encoder;
  if (options.kind == ModelKind::Dhf) {
    if (options.notes_path.empty()) {
      throw UsageError("train: a dhf model requires --notes");
    }
    auto notes_table = with_stage("ingest", [&] {
      return ingest::load_notes(options.notes_path, default_excluded_categories(),
                                options.max_notes);
    });
    log_notes(notes_table, log);
    notes::Lexicon lexicon = with_stage("notes", [&] {
      return options.lexicon_path.empty() ? notes::default_lexicon()
                                          : notes::load_lexicon(options.lexicon_path);
    });
    auto extraction = with_stage("notes", [&] {
      return notes::build_subject_symptom_table(notes_table.rows, lexicon, positives.subjects);
    });
    log << "notes: symptoms for " << extraction.table.by_subject.size() << " subjects, "
        << extraction.symptoms.size() << " distinct terms";
    if (extraction.table.n_skipped_notes > 0) {
      log << ", " << extraction.table.n_skipped_notes << " notes for unknown subjects skipped";
    }
    log << "\n";
    auto triples = with_stage("sampling", [&] {
      return sampling::generate_negative_triples(positives.interactions, extraction.table,
                                                 {options.train.neg_ratio},
                                                 mix_seed(master, kSaltNegatives));
    });
    if (triples.n_dropped_positives > 0) {
      log << "sampling: dropped " << triples.n_dropped_positives
          << " positives whose subject has no extracted symptoms\n";
    }
    dataset = std::move(triples.interactions);
    symptom_encoder = std::move(extraction.symptoms);
  } else {
    dataset = with_stage("sampling", [&] {
      return sampling::generate_negative_pairs(positives.interactions, {options.train.neg_ratio},
                                               mix_seed(master, kSaltNegatives));
    });
  }
  log << "sampling: " << dataset.count_label(1) << " positives, " << dataset.count_label(0)
      << " negatives (ratio " << options.train.neg_ratio << ")\n";

  sampling::SplitSpec spec;
  spec.train = options.train_fraction;
  spec.validation = options.validation_fraction;
  spec.test = options.test_fraction;
  spec.seed = mix_seed(master, kSaltSplit);
  auto parts = with_stage("sampling", [&] { return sampling::split(dataset, spec); });
  log << "sampling: split " << parts.train.size() << "/" << parts.validation.size() << "/"
      << parts.test.size() << " train/validation/test\n";

  Model model = with_stage("model", [&] {
    return make_model(options.kind, std::move(positives.subjects), std::move(positives.codes),
                      std::move(symptom_encoder), options.train.embedding_dim,
                      options.train.hidden_sizes, mix_seed(master, kSaltModelInit));
  });

  TrainConfig train_config = options.train;
  train_config.seed = mix_seed(master, kSaltShuffle);
  TrainHistory history = with_stage("train", [&] {
    return train(model, parts.train.records, parts.validation.records, train_config);
  });
  for (const auto& epoch : history.epochs) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "train: epoch %u/%u loss %.6f train_acc %.4f val_acc %.4f\n", epoch.epoch,
                  train_config.epochs, epoch.train_loss, epoch.train_accuracy,
                  epoch.validation_accuracy);
    log << line;
  }

  with_stage("model", [&] { save_model(model, options.out_path); });
  json history_doc;
  history_doc["epochs"] = json::array();
  for (const auto& epoch : history.epochs) {
    history_doc["epochs"].push_back({
        {"epoch", epoch.epoch},
        {"train_loss", epoch.train_loss},
        {"train_accuracy", epoch.train_accuracy},
        {"validation_accuracy", epoch.validation_accuracy},
    });
  }
  std::string history_path = history_path_for(options.out_path);
  std::ofstream history_out(history_path, std::ios::binary);
  if (!history_out) {
    throw DataError("train: cannot write file: " + history_path);
  }
  history_out << history_doc.dump(2) << "\n";
  log << "train: wrote " << options.out_path << " and " << history_path << "\n";
}

std::string run_eval(const EvalOptions& options, std::ostream& log) {
  if (options.model_path.empty()) throw UsageError("eval: --model is required");
  if (options.diagnoses_path.empty()) throw UsageError("eval: --diagnoses is required");
  if (options.k < 1) throw UsageError("eval: k must be positive");

  Model model = with_stage("model", [&] { return load_model(options.model_path); });

  auto diagnoses =
      with_stage("ingest", [&] { return ingest::load_diagnoses(options.diagnoses_path); });
  log_diagnoses(diagnoses, log);
  std::vector<ingest::DiagnosisRow> rows = std::move(diagnoses.rows);
  if (options.top_k_codes.has_value()) {
    auto filtered =
        with_stage("ingest", [&] { return ingest::filter_top_k_codes(rows, *options.top_k_codes); });
    log << "ingest: top-" << *options.top_k_codes << " codes keep " << filtered.rows.size()
        << " of " << rows.size() << " rows (coverage " << percent(filtered.coverage) << ")\n";
    rows = std::move(filtered.rows);
  }

  // Raw identifiers resolve through the model's own encoders: evaluation
  // must score the rows the model has embeddings for, or fail loudly.
  InteractionSet positives;
  positives.n_subjects = model.subjects.size();
  positives.n_codes = model.codes.size();
  std::unordered_set<uint64_t> seen_pairs;
  for (const auto& row : rows) {
    if (!model.subjects.contains(row.subject_id)) {
      throw DataError("eval: vocabulary mismatch: subject '" + row.subject_id +
                      "' is not in the model");
    }
    if (!model.codes.contains(row.icd9_code)) {
      throw DataError("eval: vocabulary mismatch: code '" + row.icd9_code +
                      "' is not in the model");
    }
    uint32_t s = model.subjects.encode(row.subject_id);
    uint32_t c = model.codes.encode(row.icd9_code);
    if (seen_pairs.insert(pair_key(s, c)).second) {
      positives.records.push_back({s, c, std::nullopt, 1});
    }
  }
  if (positives.records.empty()) {
    throw DataError("eval: no usable diagnosis rows");
  }

  InteractionSet dataset;
  notes::SubjectSymptomTable symptom_table;
  if (model.kind == ModelKind::Dhf) {
    if (options.notes_path.empty()) {
      throw UsageError("eval: a dhf model requires --notes");
    }
    auto notes_table = with_stage("ingest", [&] {
      return ingest::load_notes(options.notes_path, default_excluded_categories(),
                                options.max_notes);
    });
    log_notes(notes_table, log);
    notes::Lexicon lexicon = with_stage("notes", [&] {
      return options.lexicon_path.empty() ? notes::default_lexicon()
                                          : notes::load_lexicon(options.lexicon_path);
    });
    symptom_table =
        with_stage("notes", [&] { return remap_symptoms(notes_table.rows, lexicon, model); });
    positives.n_symptoms = model.symptoms.size();
    auto triples = with_stage("sampling", [&] {
      return sampling::generate_negative_triples(positives, symptom_table,
                                                 {options.neg_ratio},
                                                 mix_seed(options.seed, kSaltNegatives));
    });
    if (triples.n_dropped_positives > 0) {
      log << "sampling: dropped " << triples.n_dropped_positives
          << " positives whose subject has no extracted symptoms\n";
    }
    dataset = std::move(triples.interactions);
  } else {
    dataset = with_stage("sampling", [&] {
      return sampling::generate_negative_pairs(positives, {options.neg_ratio},
                                               mix_seed(options.seed, kSaltNegatives));
    });
  }

  sampling::SplitSpec spec;
  spec.train = options.train_fraction;
  spec.validation = options.validation_fraction;
  spec.test = options.test_fraction;
  spec.seed = mix_seed(options.seed, kSaltSplit);
  auto parts = with_stage("sampling", [&] { return sampling::split(dataset, spec); });

  auto split_metrics = [&](const InteractionSet& part) {
    std::vector<uint8_t> predicted = classify(model, part.records);
    std::vector<uint8_t> labels(part.records.size());
    for (size_t i = 0; i < part.records.size(); i++) labels[i] = part.records[i].label;
    double acc = metrics::accuracy(labels, predicted);
    metrics::F1Report f1 = metrics::f1_scores(labels, predicted);
    return std::pair<double, metrics::F1Report>(acc, f1);
  };
  auto [train_acc, train_f1] = with_stage("metrics", [&] { return split_metrics(parts.train); });
  auto [val_acc, val_f1] = with_stage("metrics", [&] { return split_metrics(parts.validation); });
  auto [test_acc, test_f1] = with_stage("metrics", [&] { return split_metrics(parts.test); });

  std::vector<double> test_scores = predict_batch(model, parts.test.records);
  std::vector<uint8_t> test_labels(parts.test.records.size());
  for (size_t i = 0; i < parts.test.records.size(); i++) {
    test_labels[i] = parts.test.records[i].label;
  }
  double auc = with_stage("metrics", [&] { return metrics::roc_auc(test_scores, test_labels); });

  // Leave-one-out ranking on the positives the model actually trained on.
  InteractionSet case_basis = positives_of(dataset);
  auto hr_cases = with_stage("sampling", [&] {
    return sampling::build_hitratio_cases(case_basis, options.n_candidates,
                                          mix_seed(options.seed, kSaltHitRatio));
  });
  size_t symptomless_skipped = 0;
  std::vector<sampling::HitRatioCase> cases = std::move(hr_cases.cases);
  std::unordered_map<uint32_t, uint32_t> resolved_symptom;
  if (model.kind == ModelKind::Dhf) {
    std::vector<sampling::HitRatioCase> usable;
    usable.reserve(cases.size());
    for (auto& hr_case : cases) {
      if (!symptom_table.has(hr_case.subject)) {
        symptomless_skipped++;
        continue;
      }
      // One seeded uniform symptom draw per subject, independent of the
      // order cases are scored in.
      const auto& list = symptom_table.symptoms_of(hr_case.subject);
      Rng draw(mix_seed(mix_seed(options.seed, kSaltSymptomResolve), hr_case.subject));
      resolved_symptom[hr_case.subject] =
          list[static_cast<size_t>(draw.next_index(list.size()))];
      usable.push_back(std::move(hr_case));
    }
    cases = std::move(usable);
  }
  if (hr_cases.n_skipped_subjects > 0 || symptomless_skipped > 0) {
    log << "eval: hit-ratio skipped " << hr_cases.n_skipped_subjects
        << " subjects lacking candidates and " << symptomless_skipped
        << " lacking symptoms\n";
  }
  if (cases.empty()) {
    throw DataError("eval: no subjects eligible for hit-ratio cases");
  }
  auto scorer = [&](uint32_t subject, uint32_t code) {
    if (model.kind == ModelKind::Dhf) {
      return predict(model, subject, code, resolved_symptom.at(subject));
    }
    return predict(model, subject, code);
  };
  double hit_ratio =
      with_stage("metrics", [&] { return metrics::hit_ratio_at_k(cases, scorer, options.k); });

  json report;
  report["accuracy"] = {{"train", train_acc}, {"validation", val_acc}, {"test", test_acc}};
  report["macro_f1"] = {
      {"train", train_f1.macro}, {"validation", val_f1.macro}, {"test", test_f1.macro}};
  report["micro_f1"] = test_f1.micro;
  report["auc"] = auc;
  report["hit_ratio_at_k"] = hit_ratio;
  report["k"] = options.k;
  report["counts"] = {
      {"n_pos", dataset.count_label(1)},
      {"n_neg", dataset.count_label(0)},
      {"n_cases", cases.size()},
  };
  std::string text = report.dump(2) + "\n";

  if (!options.out_path.empty()) {
    std::ofstream out(options.out_path, std::ios::binary);
    if (!out) {
      throw DataError("eval: cannot write file: " + options.out_path);
    }
    out << text;
  }
  char summary[200];
  std::snprintf(summary, sizeof(summary),
                "eval: test_acc %.4f macro_f1 %.4f auc %.4f hit_ratio@%u %.4f (%zu cases)\n",
                test_acc, test_f1.macro, auc, options.k, hit_ratio, cases.size());
  log << summary;
  return text;
}

std::string history_path_for(const std::string& model_out_path) {
  std::filesystem::path path(model_out_path);
  if (path.extension() == ".json") {
    path.replace_extension();  // drop .json
    return path.string() + ".history.json";
  }
  return model_out_path + ".history.json";
}

}  // namespace comorec::runner
