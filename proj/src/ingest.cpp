#include "ingest.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <unordered_map>

#include "csv.hpp"
#include "errors.hpp"

namespace comorec::ingest {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string field_at(const std::vector<std::string>& row, size_t index) {
  return index < row.size() ? row[index] : std::string();
}

}  // namespace

DiagnosesTable load_diagnoses(const std::string& path) {
  csv::Table table = csv::read_file(path);
  if (table.header.empty()) {
    throw DataError(path + ": empty file");
  }
  size_t subject_col = csv::column_index(table, "SUBJECT_ID", path);
  size_t hadm_col = csv::column_index(table, "HADM_ID", path);
  size_t code_col = csv::column_index(table, "ICD9_CODE", path);

  DiagnosesTable out;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    DiagnosisRow d{field_at(row, subject_col), field_at(row, hadm_col),
                   field_at(row, code_col)};
    if (d.subject_id.empty() || d.hadm_id.empty() || d.icd9_code.empty()) {
      ++out.n_dropped;
      continue;
    }
    out.rows.push_back(std::move(d));
  }
  if (out.rows.empty()) {
    std::cerr << "warning: " << path << " has no usable diagnosis rows\n";
  }
  return out;
}

TopKResult filter_top_k_codes(const std::vector<DiagnosisRow>& rows, size_t k) {
  if (k < 1) throw UsageError("top-k filter requires k >= 1");
  if (rows.empty()) throw DataError("top-k filter on empty diagnosis list");

  std::unordered_map<std::string, size_t> counts;
  for (const auto& r : rows) ++counts[r.icd9_code];

  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);

  std::unordered_set<std::string> kept;
  TopKResult out;
  for (const auto& [code, count] : ranked) {
    kept.insert(code);
    out.kept_codes.push_back(code);
  }
  for (const auto& r : rows) {
    if (kept.count(r.icd9_code)) out.rows.push_back(r);
  }
  out.coverage = static_cast<double>(out.rows.size()) / static_cast<double>(rows.size());
  return out;
}

NotesTable load_notes(const std::string& path,
                      const std::unordered_set<std::string>& excluded_categories,
                      std::optional<size_t> max_notes) {
  if (max_notes && *max_notes == 0) {
    throw UsageError("max_notes must be positive");
  }
  csv::Table table = csv::read_file(path);
  if (table.header.empty()) {
    throw DataError(path + ": empty file");
  }
  size_t subject_col = csv::column_index(table, "SUBJECT_ID", path);
  size_t hadm_col = csv::column_index(table, "HADM_ID", path);
  size_t category_col = csv::column_index(table, "CATEGORY", path);
  size_t text_col = csv::column_index(table, "TEXT", path);

  std::unordered_set<std::string> excluded;
  for (const auto& c : excluded_categories) excluded.insert(lower(c));

  NotesTable out;
  for (const auto& row : table.rows) {
    if (max_notes && out.rows.size() >= *max_notes) break;
    NoteRow n{field_at(row, subject_col), field_at(row, hadm_col),
              field_at(row, category_col), field_at(row, text_col)};
    if (n.subject_id.empty() || n.text.empty()) {
      ++out.n_dropped;
      continue;
    }
    if (excluded.count(lower(n.category))) {
      ++out.n_excluded;
      continue;
    }
    out.rows.push_back(std::move(n));
  }
  if (out.rows.empty()) {
    std::cerr << "warning: " << path << " has no usable note rows\n";
  }
  return out;
}

PositiveSet build_positive_set(const std::vector<DiagnosisRow>& rows) {
  if (rows.empty()) throw DataError("cannot build positives from an empty diagnosis list");

  PositiveSet out;
  std::unordered_set<uint64_t> seen;
  for (const auto& r : rows) {
    uint32_t s = out.subjects.add(r.subject_id);
    uint32_t c = out.codes.add(r.icd9_code);
    if (seen.insert(pair_key(s, c)).second) {
      out.interactions.records.push_back(Interaction{s, c, std::nullopt, 1});
    }
  }
  out.interactions.n_subjects = out.subjects.size();
  out.interactions.n_codes = out.codes.size();
  return out;
}

}  // namespace comorec::ingest
