#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"

namespace comorec::ingest {

struct DiagnosisRow {
  std::string subject_id;
  std::string hadm_id;
  std::string icd9_code;
};

struct NoteRow {
  std::string subject_id;
  std::string hadm_id;
  std::string category;
  std::string text;
};

struct DiagnosesTable {
  std::vector<DiagnosisRow> rows;
  size_t n_dropped = 0;  // rows with a blank required field
};

struct NotesTable {
  std::vector<NoteRow> rows;
  size_t n_excluded = 0;  // rows dropped by category exclusion
  size_t n_dropped = 0;   // rows with blank subject or text
};

struct TopKResult {
  std::vector<DiagnosisRow> rows;
  double coverage = 0.0;  // retained / input
  std::vector<std::string> kept_codes;
};

struct PositiveSet {
  InteractionSet interactions;
  Encoder subjects;
  Encoder codes;
};

// Columns SUBJECT_ID, HADM_ID, ICD9_CODE located case-insensitively; extra
// columns ignored. Rows with a blank required field are dropped and counted.
DiagnosesTable load_diagnoses(const std::string& path);

// Retains rows whose code ranks among the k most frequent. Ties are broken
// by lexicographic code order so runs are reproducible.
TopKResult filter_top_k_codes(const std::vector<DiagnosisRow>& rows, size_t k);

// Drops rows whose CATEGORY matches an excluded category (case-insensitive
// exact match), then keeps at most max_notes rows in file order.
NotesTable load_notes(const std::string& path,
                      const std::unordered_set<std::string>& excluded_categories,
                      std::optional<size_t> max_notes = std::nullopt);

// One positive interaction per distinct (subject, code) pair; repeat
// diagnoses across admissions collapse. Encoders are fit by first appearance.
PositiveSet build_positive_set(const std::vector<DiagnosisRow>& rows);

}  // namespace comorec::ingest
