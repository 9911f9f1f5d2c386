#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"

namespace comorec::synthetic {

// Planted-cluster generator. Subjects and codes are assigned to clusters
// round-robin; a subject carries each same-cluster code with probability
// p_in and each cross-cluster code with probability p_out. Every subject
// gets one nursing note that mentions the cluster's symptom terms verbatim,
// plus one off-cluster term with probability symptom_noise.
struct SyntheticConfig {
  uint32_t n_subjects = 1000;
  uint32_t n_codes = 60;
  uint32_t n_clusters = 6;
  double p_in = 0.6;
  double p_out = 0.05;
  uint32_t symptoms_per_cluster = 3;
  double symptom_noise = 0.1;
  uint64_t seed = 0;

  void validate() const;  // throws UsageError
};

struct SyntheticData {
  csv::Table diagnoses;  // SUBJECT_ID, HADM_ID, ICD9_CODE
  csv::Table notes;      // SUBJECT_ID, HADM_ID, CATEGORY, TEXT
  std::string truth_json;
  // The terms planted per cluster, flattened; written out as a lexicon file
  // so a generated dataset is self-contained.
  std::vector<std::string> lexicon_terms;
};

SyntheticData generate(const SyntheticConfig& config);

std::string table_to_csv(const csv::Table& table);

// Writes diagnoses.csv, notes.csv, truth.json and lexicon.tsv into out_dir
// (created if missing). Throws DataError when a file cannot be written.
void write_files(const SyntheticData& data, const std::string& out_dir);

}  // namespace comorec::synthetic
