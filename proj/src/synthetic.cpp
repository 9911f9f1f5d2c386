#include "synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace comorec::synthetic {

namespace {

// Single-word symptom terms from the built-in clinical vocabulary. Planting
// only single-word terms keeps the greedy matcher's output independent of
// which neighbours land next to each other in a sentence, so extraction
// recovers exactly the planted set whether the generated lexicon file or
// the built-in vocabulary is in use.
const std::vector<std::string>& planted_term_pool() {
  static const std::vector<std::string> pool = {
      "headache",      "dizziness",      "vertigo",       "nausea",
      "vomiting",      "diarrhea",       "constipation",  "fever",
      "chills",        "rigors",         "dyspnea",       "wheezing",
      "stridor",       "tachypnea",      "hypoxia",       "orthopnea",
      "hemoptysis",    "fatigue",        "malaise",       "lethargy",
      "rash",          "pruritus",       "erythema",      "bruising",
      "petechiae",     "pallor",         "cyanosis",      "jaundice",
      "diaphoresis",   "dehydration",    "syncope",       "palpitations",
      "tachycardia",   "bradycardia",    "hypotension",   "hypertension",
      "arrhythmia",    "confusion",      "disorientation", "hallucinations",
      "agitation",     "restlessness",   "anxiety",       "depression",
      "insomnia",      "somnolence",     "seizure",       "tremor",
      "numbness",      "tingling",       "paresthesia",   "dysarthria",
      "aphasia",       "ataxia",         "anorexia",      "polydipsia",
      "polyphagia",    "polyuria",       "oliguria",      "nocturia",
      "dysuria",       "hematuria",      "dysphagia",     "odynophagia",
      "heartburn",     "bloating",       "flatulence",    "melena",
      "hematemesis",   "hematochezia",   "guarding",      "ascites",
      "hepatomegaly",  "splenomegaly",   "lymphadenopathy", "hoarseness",
      "photophobia",   "diplopia",       "tinnitus",      "epistaxis",
      "myalgia",       "arthralgia",     "induration",    "hyperglycemia",
      "hypoglycemia",  "crackles",       "rhonchi",       "hypercapnia",
  };
  return pool;
}

std::string padded_id(char prefix, uint32_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*u", prefix, width, value);
  return buf;
}

int id_width(uint32_t n) {
  int width = 1;
  while (n >= 10) {
    n /= 10;
    width++;
  }
  return width;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); i++) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
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

}  // namespace

void SyntheticConfig::validate() const {
  if (n_subjects < 1 || n_codes < 1 || n_clusters < 1) {
    throw UsageError("n_subjects, n_codes and n_clusters must be positive");
  }
  if (n_clusters > std::min(n_subjects, n_codes)) {
    throw UsageError("n_clusters must not exceed min(n_subjects, n_codes)");
  }
  if (!(p_out >= 0.0) || !(p_out < p_in) || !(p_in <= 1.0)) {
    throw UsageError("probabilities must satisfy 0 <= p_out < p_in <= 1");
  }
  if (symptom_noise < 0.0 || symptom_noise > 1.0) {
    throw UsageError("symptom_noise must lie in [0, 1]");
  }
  if (symptoms_per_cluster < 1) {
    throw UsageError("symptoms_per_cluster must be positive");
  }
  size_t needed = static_cast<size_t>(n_clusters) * symptoms_per_cluster;
  if (needed > planted_term_pool().size()) {
    throw UsageError("n_clusters * symptoms_per_cluster must not exceed the term pool of " +
                     std::to_string(planted_term_pool().size()));
  }
}

SyntheticData generate(const SyntheticConfig& config) {
  config.validate();

  int subject_width = id_width(config.n_subjects);
  int code_width = id_width(config.n_codes);

  // Round-robin cluster assignment partitions subjects and codes evenly.
  auto subject_cluster = [&](uint32_t i) { return i % config.n_clusters; };
  auto code_cluster = [&](uint32_t j) { return j % config.n_clusters; };

  std::vector<std::vector<std::string>> cluster_terms(config.n_clusters);
  for (uint32_t c = 0; c < config.n_clusters; c++) {
    for (uint32_t t = 0; t < config.symptoms_per_cluster; t++) {
      cluster_terms[c].push_back(
          planted_term_pool()[static_cast<size_t>(c) * config.symptoms_per_cluster + t]);
    }
  }

  Rng rng(config.seed);
  SyntheticData data;
  data.diagnoses.header = {"SUBJECT_ID", "HADM_ID", "ICD9_CODE"};
  data.notes.header = {"SUBJECT_ID", "HADM_ID", "CATEGORY", "TEXT"};

  for (uint32_t i = 0; i < config.n_subjects; i++) {
    std::string sid = padded_id('S', i + 1, subject_width);
    std::string hadm = padded_id('H', i + 1, subject_width);
    uint32_t sc = subject_cluster(i);

    for (uint32_t j = 0; j < config.n_codes; j++) {
      double p = (code_cluster(j) == sc) ? config.p_in : config.p_out;
      if (rng.bernoulli(p)) {
        data.diagnoses.rows.push_back({sid, hadm, padded_id('C', j + 1, code_width)});
      }
    }

    // One nursing note per subject; the comma exercises CSV quoting end to
    // end. Fillers ("admitted", "vitals", ...) are not lexicon terms.
    std::string text = "Pt admitted, c/o " + join(cluster_terms[sc], " and ") + ".";
    if (config.n_clusters > 1 && rng.bernoulli(config.symptom_noise)) {
      uint32_t other = (sc + 1 + static_cast<uint32_t>(rng.next_index(config.n_clusters - 1))) %
                       config.n_clusters;
      const auto& pool = cluster_terms[other];
      text += " Also reports " + pool[rng.next_index(pool.size())] + ".";
    }
    text += " Vitals stable.";
    data.notes.rows.push_back({sid, hadm, "Nursing", text});

    // A sprinkling of discharge summaries carrying off-cluster terms: the
    // ingest layer excludes the category, so these must not leak into the
    // extracted features.
    if (i % 17 == 0) {
      uint32_t other = (sc + 1) % config.n_clusters;
      std::string decoy = "Discharge summary. Hospital course notable for " +
                          join(cluster_terms[other], ", ") + ". Follow up as needed.";
      data.notes.rows.push_back({sid, hadm, "Discharge summary", decoy});
    }
  }

  nlohmann::json truth;
  for (uint32_t i = 0; i < config.n_subjects; i++) {
    truth["subject_cluster"][padded_id('S', i + 1, subject_width)] = subject_cluster(i);
  }
  for (uint32_t j = 0; j < config.n_codes; j++) {
    truth["code_cluster"][padded_id('C', j + 1, code_width)] = code_cluster(j);
  }
  for (uint32_t c = 0; c < config.n_clusters; c++) {
    truth["cluster_symptoms"][std::to_string(c)] = cluster_terms[c];
    data.lexicon_terms.insert(data.lexicon_terms.end(), cluster_terms[c].begin(),
                              cluster_terms[c].end());
  }
  truth["config"] = {
      {"n_subjects", config.n_subjects},
      {"n_codes", config.n_codes},
      {"n_clusters", config.n_clusters},
      {"p_in", config.p_in},
      {"p_out", config.p_out},
      {"symptoms_per_cluster", config.symptoms_per_cluster},
      {"symptom_noise", config.symptom_noise},
      {"seed", config.seed},
  };
  data.truth_json = truth.dump(2) + "\n";
  return data;
}

std::string table_to_csv(const csv::Table& table) {
  std::string out = csv::format_row(table.header);
  for (const auto& row : table.rows) {
    out += csv::format_row(row);
  }
  return out;
}

void write_files(const SyntheticData& data, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw DataError("cannot create directory: " + out_dir + " (" + ec.message() + ")");
  }
  std::filesystem::path dir(out_dir);
  write_text_file((dir / "diagnoses.csv").string(), table_to_csv(data.diagnoses));
  write_text_file((dir / "notes.csv").string(), table_to_csv(data.notes));
  write_text_file((dir / "truth.json").string(), data.truth_json);

  std::string lexicon = "# term\tkind\n";
  for (const auto& term : data.lexicon_terms) {
    lexicon += term + "\tsymptom\n";
  }
  write_text_file((dir / "lexicon.tsv").string(), lexicon);
}

}  // namespace comorec::synthetic
