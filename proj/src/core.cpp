#include "core.hpp"

#include <unordered_set>

#include "errors.hpp"

namespace comorec {

Encoder Encoder::fit(std::span<const std::string> raw_ids) {
  if (raw_ids.empty()) {
    throw DataError("empty vocabulary");
  }
  Encoder e;
  for (const auto& id : raw_ids) e.add(id);
  return e;
}

uint32_t Encoder::add(const std::string& raw) {
  auto it = forward_.find(raw);
  if (it != forward_.end()) return it->second;
  uint32_t index = static_cast<uint32_t>(backward_.size());
  forward_.emplace(raw, index);
  backward_.push_back(raw);
  return index;
}

uint32_t Encoder::encode(const std::string& raw) const {
  auto it = forward_.find(raw);
  if (it == forward_.end()) {
    throw DataError("unknown identifier: " + raw);
  }
  return it->second;
}

const std::string& Encoder::decode(uint32_t index) const {
  if (index >= backward_.size()) {
    throw UsageError("encoder index out of range: " + std::to_string(index));
  }
  return backward_[index];
}

size_t InteractionSet::count_label(uint8_t label) const {
  size_t n = 0;
  for (const auto& r : records) {
    if (r.label == label) ++n;
  }
  return n;
}

void InteractionSet::validate() const {
  std::unordered_set<uint64_t> positives;
  for (const auto& r : records) {
    if (r.subject >= n_subjects) throw DataError("subject index out of range");
    if (r.code >= n_codes) throw DataError("code index out of range");
    if (r.symptom && *r.symptom >= n_symptoms) throw DataError("symptom index out of range");
    if (r.label > 1) throw DataError("label must be 0 or 1");
    if (r.label == 1 && !positives.insert(pair_key(r.subject, r.code)).second) {
      throw DataError("duplicate positive (subject, code) pair");
    }
  }
}

}  // namespace comorec
