#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace comorec {

// Bijective mapping between raw string identifiers (subject ids, ICD-9
// codes, symptom terms) and dense indices, assigned by first appearance.
// Immutable once fitted; safe to share across threads.
class Encoder {
 public:
  Encoder() = default;

  static Encoder fit(std::span<const std::string> raw_ids);

  // Registers the id if unseen and returns its index. Fit-time only.
  uint32_t add(const std::string& raw);

  // Throws DataError on an unknown id; there is no silent auto-registration.
  uint32_t encode(const std::string& raw) const;
  const std::string& decode(uint32_t index) const;

  bool contains(const std::string& raw) const { return forward_.count(raw) != 0; }
  uint32_t size() const { return static_cast<uint32_t>(backward_.size()); }

  // Ids in index order; backs serialization.
  const std::vector<std::string>& ids() const { return backward_; }

 private:
  std::unordered_map<std::string, uint32_t> forward_;
  std::vector<std::string> backward_;
};

// One labeled (subject, code[, symptom]) record. `symptom` is set exactly
// when the record belongs to a triple (DHF-style) dataset.
struct Interaction {
  uint32_t subject = 0;
  uint32_t code = 0;
  std::optional<uint32_t> symptom;
  uint8_t label = 0;
};

struct InteractionSet {
  std::vector<Interaction> records;
  uint32_t n_subjects = 0;
  uint32_t n_codes = 0;
  uint32_t n_symptoms = 0;

  size_t size() const { return records.size(); }
  size_t count_label(uint8_t label) const;

  // Checks index bounds against the declared cardinalities and that the
  // positive (subject, code) pairs form a set. Throws DataError.
  void validate() const;
};

// Packs a (subject, code) pair into one key for hash-set membership tests.
inline uint64_t pair_key(uint32_t subject, uint32_t code) {
  return (static_cast<uint64_t>(subject) << 32) | code;
}

}  // namespace comorec
