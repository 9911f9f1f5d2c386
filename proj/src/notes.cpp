#include "notes.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace comorec::notes {

namespace {

std::string normalize_term(const std::string& term, const std::unordered_set<std::string>& stopwords) {
  std::string normalized;
  size_t n_tokens = 0;
  for (const auto& token : tokenize(term)) {
    if (stopwords.count(token)) continue;
    if (!normalized.empty()) normalized += ' ';
    normalized += token;
    ++n_tokens;
  }
  if (n_tokens > kMaxTermTokens) {
    throw DataError("lexicon term longer than " + std::to_string(kMaxTermTokens) +
                    " tokens: " + term);
  }
  return normalized;
}

TermKind parse_kind(const std::string& kind, const std::string& origin) {
  if (kind == "symptom") return TermKind::Symptom;
  if (kind == "medication") return TermKind::Medication;
  throw DataError(origin + ": unknown term kind '" + kind + "'");
}

}  // namespace

Lexicon::Lexicon(std::vector<std::pair<std::string, TermKind>> terms,
                 std::unordered_set<std::string> stopwords)
    : stopwords_(std::move(stopwords)) {
  if (terms.empty()) throw DataError("lexicon has no terms");
  for (auto& [term, kind] : terms) {
    std::string normalized = normalize_term(term, stopwords_);
    if (normalized.empty()) {
      throw DataError("lexicon term is entirely stopwords: " + term);
    }
    if (!entries_.emplace(normalized, std::make_pair(term, kind)).second) {
      throw DataError("duplicate lexicon term: " + term);
    }
    size_t span = 1 + static_cast<size_t>(std::count(normalized.begin(), normalized.end(), ' '));
    max_span_ = std::max(max_span_, span);
  }
}

const std::pair<std::string, TermKind>* Lexicon::find(const std::string& normalized) const {
  auto it = entries_.find(normalized);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string token;
  auto flush = [&] {
    // strip leading/trailing punctuation; internal punctuation ("c/o") stays
    size_t begin = 0, end = token.size();
    while (begin < end && std::ispunct(static_cast<unsigned char>(token[begin]))) ++begin;
    while (end > begin && std::ispunct(static_cast<unsigned char>(token[end - 1]))) --end;
    if (end > begin) tokens.push_back(token.substr(begin, end - begin));
    token.clear();
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else {
      token += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return tokens;
}

std::vector<std::pair<std::string, TermKind>> extract_terms(
    const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::vector<std::string> filtered;
  filtered.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!lexicon.is_stopword(t)) filtered.push_back(t);
  }

  std::vector<std::pair<std::string, TermKind>> out;
  const size_t window = std::min(kMaxTermTokens, lexicon.max_span());
  size_t i = 0;
  while (i < filtered.size()) {
    size_t longest = std::min(window, filtered.size() - i);
    bool matched = false;
    for (size_t span = longest; span >= 1; --span) {
      std::string candidate = filtered[i];
      for (size_t j = 1; j < span; ++j) {
        candidate += ' ';
        candidate += filtered[i + j];
      }
      if (const auto* entry = lexicon.find(candidate)) {
        out.push_back(*entry);
        i += span;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

SymptomExtraction build_subject_symptom_table(const std::vector<ingest::NoteRow>& notes,
                                              const Lexicon& lexicon,
                                              const Encoder& subject_encoder) {
  SymptomExtraction out;
  std::unordered_map<uint32_t, std::unordered_set<uint32_t>> seen;
  for (const auto& note : notes) {
    if (!subject_encoder.contains(note.subject_id)) {
      ++out.table.n_skipped_notes;
      continue;
    }
    uint32_t subject = subject_encoder.encode(note.subject_id);
    for (const auto& [term, kind] : extract_terms(tokenize(note.text), lexicon)) {
      uint32_t symptom = out.symptoms.add(term);
      if (seen[subject].insert(symptom).second) {
        out.table.by_subject[subject].push_back(symptom);
      }
    }
  }
  out.table.n_symptoms = out.symptoms.size();
  return out;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tokens = tokenize(line);
    if (tokens.size() == 1) out.insert(tokens[0]);
  }
  return out;
}

namespace {

Lexicon load_lexicon_with(const std::string& path, std::unordered_set<std::string> stopwords) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::pair<std::string, TermKind>> terms;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected term<TAB>kind");
    }
    terms.emplace_back(line.substr(0, tab),
                       parse_kind(line.substr(tab + 1), path + ":" + std::to_string(line_no)));
  }
  return Lexicon(std::move(terms), std::move(stopwords));
}

}  // namespace

Lexicon load_lexicon(const std::string& path) {
  return load_lexicon_with(path, default_stopwords());
}

Lexicon load_lexicon(const std::string& path, const std::string& stopwords_path) {
  return load_lexicon_with(path, load_stopwords(stopwords_path));
}

Lexicon default_lexicon() {
  return Lexicon(default_terms(), default_stopwords());
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",      "about", "after",  "all",   "an",    "and",   "any",   "are",
      "as",     "at",    "be",     "been",  "before", "both",  "but",   "by",
      "can",    "did",   "do",     "does",  "for",   "from",  "had",   "has",
      "have",   "he",    "her",    "him",   "his",   "i",     "if",    "in",
      "into",   "is",    "it",     "its",   "may",   "more",  "most",  "no",
      "not",    "of",    "on",     "or",    "our",   "she",   "so",    "some",
      "than",   "that",  "the",    "their", "them",  "then",  "there", "these",
      "they",   "this",  "those",  "to",    "was",   "we",    "were",  "which",
      "while",  "will",  "with",   "would", "you",   "your",  "pt",    "pts",
      "patient", "c/o",  "denies", "reports", "noted", "also", "daily", "prn",
      "mg",     "ml",    "po",     "bid",   "tid",
  };
  return words;
}

const std::vector<std::pair<std::string, TermKind>>& default_terms() {
  using enum TermKind;
  static const std::vector<std::pair<std::string, TermKind>> terms = {
      {"chest pain", Symptom},          {"abdominal pain", Symptom},
      {"back pain", Symptom},           {"flank pain", Symptom},
      {"pelvic pain", Symptom},         {"joint pain", Symptom},
      {"pleuritic pain", Symptom},      {"neck pain", Symptom},
      {"hip pain", Symptom},            {"shoulder pain", Symptom},
      {"knee pain", Symptom},           {"headache", Symptom},
      {"dizziness", Symptom},           {"vertigo", Symptom},
      {"nausea", Symptom},              {"vomiting", Symptom},
      {"diarrhea", Symptom},            {"constipation", Symptom},
      {"fever", Symptom},               {"chills", Symptom},
      {"rigors", Symptom},              {"night sweats", Symptom},
      {"cough", Symptom},               {"dry cough", Symptom},
      {"productive cough", Symptom},    {"dyspnea", Symptom},
      {"shortness of breath", Symptom}, {"wheezing", Symptom},
      {"stridor", Symptom},             {"tachypnea", Symptom},
      {"bradypnea", Symptom},           {"apnea", Symptom},
      {"hypoxia", Symptom},             {"respiratory distress", Symptom},
      {"orthopnea", Symptom},           {"hemoptysis", Symptom},
      {"fatigue", Symptom},             {"weakness", Symptom},
      {"malaise", Symptom},             {"lethargy", Symptom},
      {"edema", Symptom},               {"leg swelling", Symptom},
      {"ankle swelling", Symptom},      {"rash", Symptom},
      {"pruritus", Symptom},            {"erythema", Symptom},
      {"cellulitis", Symptom},          {"bruising", Symptom},
      {"petechiae", Symptom},           {"pallor", Symptom},
      {"cyanosis", Symptom},            {"jaundice", Symptom},
      {"diaphoresis", Symptom},         {"dehydration", Symptom},
      {"syncope", Symptom},             {"palpitations", Symptom},
      {"tachycardia", Symptom},         {"bradycardia", Symptom},
      {"hypotension", Symptom},         {"hypertension", Symptom},
      {"arrhythmia", Symptom},          {"heart murmur", Symptom},
      {"chest tightness", Symptom},     {"confusion", Symptom},
      {"disorientation", Symptom},      {"memory loss", Symptom},
      {"hallucinations", Symptom},      {"agitation", Symptom},
      {"restlessness", Symptom},        {"anxiety", Symptom},
      {"depression", Symptom},          {"insomnia", Symptom},
      {"somnolence", Symptom},          {"seizure", Symptom},
      {"tremor", Symptom},              {"numbness", Symptom},
      {"tingling", Symptom},            {"paresthesia", Symptom},
      {"dysarthria", Symptom},          {"aphasia", Symptom},
      {"ataxia", Symptom},              {"gait instability", Symptom},
      {"loss of consciousness", Symptom}, {"anorexia", Symptom},
      {"loss of appetite", Symptom},    {"weight loss", Symptom},
      {"weight gain", Symptom},         {"polydipsia", Symptom},
      {"polyphagia", Symptom},          {"polyuria", Symptom},
      {"oliguria", Symptom},            {"nocturia", Symptom},
      {"dysuria", Symptom},             {"hematuria", Symptom},
      {"urinary retention", Symptom},   {"urinary incontinence", Symptom},
      {"dysphagia", Symptom},           {"odynophagia", Symptom},
      {"heartburn", Symptom},           {"bloating", Symptom},
      {"flatulence", Symptom},          {"melena", Symptom},
      {"hematemesis", Symptom},         {"hematochezia", Symptom},
      {"abdominal distension", Symptom}, {"rebound tenderness", Symptom},
      {"guarding", Symptom},            {"ascites", Symptom},
      {"hepatomegaly", Symptom},        {"splenomegaly", Symptom},
      {"lymphadenopathy", Symptom},     {"sore throat", Symptom},
      {"hoarseness", Symptom},          {"neck stiffness", Symptom},
      {"photophobia", Symptom},         {"blurred vision", Symptom},
      {"diplopia", Symptom},            {"tinnitus", Symptom},
      {"hearing loss", Symptom},        {"epistaxis", Symptom},
      {"dry mouth", Symptom},           {"mouth ulcers", Symptom},
      {"bleeding gums", Symptom},       {"myalgia", Symptom},
      {"arthralgia", Symptom},          {"joint swelling", Symptom},
      {"muscle cramps", Symptom},       {"pressure ulcer", Symptom},
      {"wound infection", Symptom},     {"purulent drainage", Symptom},
      {"induration", Symptom},          {"hyperglycemia", Symptom},
      {"hypoglycemia", Symptom},        {"hot flashes", Symptom},
      {"crackles", Symptom},            {"rhonchi", Symptom},
      {"accessory muscle use", Symptom}, {"hypercapnia", Symptom},
      {"falls", Symptom},               {"dysmenorrhea", Symptom},
      {"aspirin", Medication},          {"ibuprofen", Medication},
      {"acetaminophen", Medication},    {"naproxen", Medication},
      {"metoprolol", Medication},       {"atenolol", Medication},
      {"carvedilol", Medication},       {"lisinopril", Medication},
      {"enalapril", Medication},        {"losartan", Medication},
      {"valsartan", Medication},        {"amlodipine", Medication},
      {"diltiazem", Medication},        {"verapamil", Medication},
      {"furosemide", Medication},       {"hydrochlorothiazide", Medication},
      {"spironolactone", Medication},   {"warfarin", Medication},
      {"heparin", Medication},          {"enoxaparin", Medication},
      {"apixaban", Medication},         {"clopidogrel", Medication},
      {"atorvastatin", Medication},     {"simvastatin", Medication},
      {"rosuvastatin", Medication},     {"metformin", Medication},
      {"insulin", Medication},          {"glipizide", Medication},
      {"glyburide", Medication},        {"omeprazole", Medication},
      {"pantoprazole", Medication},     {"famotidine", Medication},
      {"ondansetron", Medication},      {"metoclopramide", Medication},
      {"morphine", Medication},         {"oxycodone", Medication},
      {"hydromorphone", Medication},    {"fentanyl", Medication},
      {"tramadol", Medication},         {"gabapentin", Medication},
      {"pregabalin", Medication},       {"prednisone", Medication},
      {"hydrocortisone", Medication},   {"dexamethasone", Medication},
      {"albuterol", Medication},        {"ipratropium", Medication},
      {"montelukast", Medication},      {"azithromycin", Medication},
      {"ceftriaxone", Medication},      {"vancomycin", Medication},
      {"levofloxacin", Medication},     {"ciprofloxacin", Medication},
      {"metronidazole", Medication},    {"amoxicillin", Medication},
      {"doxycycline", Medication},      {"nitroglycerin", Medication},
      {"digoxin", Medication},          {"amiodarone", Medication},
      {"sertraline", Medication},       {"fluoxetine", Medication},
      {"citalopram", Medication},       {"lorazepam", Medication},
      {"diazepam", Medication},         {"midazolam", Medication},
      {"haloperidol", Medication},      {"quetiapine", Medication},
      {"levothyroxine", Medication},    {"allopurinol", Medication},
      {"colchicine", Medication},       {"piperacillin", Medication},
  };
  return terms;
}

}  // namespace comorec::notes
