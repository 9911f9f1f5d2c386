#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"

namespace comorec::notes {

enum class TermKind { Symptom, Medication };

// Dictionary matcher vocabulary. Terms are keyed by their normalized form
// (lowercased, stopword tokens dropped) because matching runs on a
// stopword-filtered token stream; the original spelling is what gets
// reported. A term that normalizes to nothing is rejected at load.
class Lexicon {
 public:
  Lexicon(std::vector<std::pair<std::string, TermKind>> terms,
          std::unordered_set<std::string> stopwords);

  bool is_stopword(const std::string& token) const { return stopwords_.count(token) != 0; }

  // Looks up a normalized candidate span; returns nullptr when absent.
  const std::pair<std::string, TermKind>* find(const std::string& normalized) const;

  size_t size() const { return entries_.size(); }
  size_t max_span() const { return max_span_; }

 private:
  std::unordered_map<std::string, std::pair<std::string, TermKind>> entries_;
  std::unordered_set<std::string> stopwords_;
  size_t max_span_ = 1;
};

// kMaxTermTokens bounds the greedy scan window.
inline constexpr size_t kMaxTermTokens = 4;

// Built-in clinical vocabulary (~200 symptom/medication terms) and a small
// English stopword list; used when no lexicon file is supplied.
const std::vector<std::pair<std::string, TermKind>>& default_terms();
const std::unordered_set<std::string>& default_stopwords();
Lexicon default_lexicon();

// Lexicon file: UTF-8 lines "term<TAB>kind" with kind in {symptom,
// medication}. Stopword file: one token per line. Blank lines and lines
// starting with '#' are skipped.
Lexicon load_lexicon(const std::string& path);
Lexicon load_lexicon(const std::string& path, const std::string& stopwords_path);
std::unordered_set<std::string> load_stopwords(const std::string& path);

// Lowercases, splits on whitespace and strips leading/trailing punctuation
// from each token. Stopwords are NOT removed here.
std::vector<std::string> tokenize(const std::string& text);

// Removes stopwords, then scans left to right taking the longest lexicon
// match (up to kMaxTermTokens tokens); matched spans consume their tokens.
// Emits (original term, kind) in text order, duplicates retained.
std::vector<std::pair<std::string, TermKind>> extract_terms(
    const std::vector<std::string>& tokens, const Lexicon& lexicon);

struct SubjectSymptomTable {
  // subject index -> symptom indices, deduplicated, in order of first mention
  std::unordered_map<uint32_t, std::vector<uint32_t>> by_subject;
  uint32_t n_symptoms = 0;
  size_t n_skipped_notes = 0;  // notes whose subject the encoder does not know

  bool has(uint32_t subject) const { return by_subject.count(subject) != 0; }
  const std::vector<uint32_t>& symptoms_of(uint32_t subject) const {
    return by_subject.at(subject);
  }
};

struct SymptomExtraction {
  SubjectSymptomTable table;
  Encoder symptoms;
};

// Pools symptom and medication mentions into one feature vocabulary, fit by
// first extraction across notes in file order.
SymptomExtraction build_subject_symptom_table(const std::vector<ingest::NoteRow>& notes,
                                              const Lexicon& lexicon,
                                              const Encoder& subject_encoder);

}  // namespace comorec::notes
