#include "sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "errors.hpp"
#include "rng.hpp"

namespace comorec::sampling {

namespace {

constexpr uint64_t kRejectionCapFactor = 1000;

std::unordered_set<uint64_t> positive_keys(const InteractionSet& positives) {
  std::unordered_set<uint64_t> keys;
  keys.reserve(positives.records.size() * 2);
  for (const auto& r : positives.records) {
    if (r.label == 1) keys.insert(pair_key(r.subject, r.code));
  }
  return keys;
}

void check_ratio(NegRatio ratio) {
  if (ratio.negatives_per_positive < 1) {
    throw UsageError("negative ratio must be >= 1");
  }
}

}  // namespace

InteractionSet generate_negative_pairs(const InteractionSet& positives,
                                       NegRatio ratio, uint64_t seed) {
  check_ratio(ratio);
  const auto keys = positive_keys(positives);
  const uint64_t universe =
      static_cast<uint64_t>(positives.n_subjects) * positives.n_codes;
  if (universe <= keys.size()) {
    throw DataError("insufficient negative space");
  }

  InteractionSet out = positives;
  const uint64_t target = static_cast<uint64_t>(ratio.negatives_per_positive) * keys.size();
  out.records.reserve(out.records.size() + target);

  Rng rng(seed);
  uint64_t produced = 0;
  uint64_t attempts = 0;
  const uint64_t cap = kRejectionCapFactor * target;
  while (produced < target) {
    if (attempts++ >= cap) {
      throw DataError("insufficient negative space");
    }
    uint32_t s = static_cast<uint32_t>(rng.next_index(positives.n_subjects));
    uint32_t c = static_cast<uint32_t>(rng.next_index(positives.n_codes));
    if (keys.count(pair_key(s, c))) continue;
    out.records.push_back(Interaction{s, c, std::nullopt, 0});
    ++produced;
  }
  return out;
}

TripleResult generate_negative_triples(const InteractionSet& positives,
                                       const notes::SubjectSymptomTable& symptoms,
                                       NegRatio ratio, uint64_t seed) {
  check_ratio(ratio);
  if (symptoms.by_subject.empty()) {
    throw DataError("no symptoms for any subject");
  }
  const auto keys = positive_keys(positives);

  TripleResult out;
  out.interactions.n_subjects = positives.n_subjects;
  out.interactions.n_codes = positives.n_codes;
  out.interactions.n_symptoms = symptoms.n_symptoms;

  Rng rng(seed);

  // Positives first, each augmented with one of its subject's symptoms.
  std::unordered_set<uint32_t> eligible_set;
  for (const auto& r : positives.records) {
    if (r.label != 1) continue;
    if (!symptoms.has(r.subject)) {
      ++out.n_dropped_positives;
      continue;
    }
    const auto& pool = symptoms.symptoms_of(r.subject);
    uint32_t m = pool[rng.next_index(pool.size())];
    out.interactions.records.push_back(Interaction{r.subject, r.code, m, 1});
    eligible_set.insert(r.subject);
  }
  const size_t kept = out.interactions.records.size();
  if (kept == 0) {
    throw DataError("no symptoms for any subject");
  }

  std::vector<uint32_t> eligible(eligible_set.begin(), eligible_set.end());
  std::sort(eligible.begin(), eligible.end());

  const uint64_t target = static_cast<uint64_t>(ratio.negatives_per_positive) * kept;
  uint64_t produced = 0;
  uint64_t attempts = 0;
  const uint64_t cap = kRejectionCapFactor * target;
  while (produced < target) {
    if (attempts++ >= cap) {
      throw DataError("insufficient negative space");
    }
    uint32_t s = eligible[rng.next_index(eligible.size())];
    uint32_t c = static_cast<uint32_t>(rng.next_index(positives.n_codes));
    if (keys.count(pair_key(s, c))) continue;
    const auto& pool = symptoms.symptoms_of(s);
    uint32_t m = pool[rng.next_index(pool.size())];
    out.interactions.records.push_back(Interaction{s, c, m, 0});
    ++produced;
  }
  return out;
}

SplitResult split(const InteractionSet& data, const SplitSpec& spec) {
  if (spec.train <= 0 || spec.validation <= 0 || spec.test <= 0) {
    throw UsageError("split fractions must be positive");
  }
  if (std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must sum to 1");
  }
  if (data.records.size() < 10) {
    throw UsageError("need at least 10 records to split");
  }

  // Stratify by label: shuffle each stratum, then cut it with
  // largest-remainder counts so totals are exact.
  std::vector<size_t> strata[2];
  for (size_t i = 0; i < data.records.size(); ++i) {
    strata[data.records[i].label == 1 ? 1 : 0].push_back(i);
  }

  Rng rng(spec.seed);
  const double fractions[3] = {spec.train, spec.validation, spec.test};
  std::vector<size_t> assigned[3];

  for (auto& stratum : strata) {
    rng.shuffle(stratum);
    const size_t m = stratum.size();
    size_t counts[3];
    double remainders[3];
    size_t used = 0;
    for (int part = 0; part < 3; ++part) {
      double want = fractions[part] * static_cast<double>(m);
      counts[part] = static_cast<size_t>(want);
      remainders[part] = want - static_cast<double>(counts[part]);
      used += counts[part];
    }
    while (used < m) {
      int best = 0;
      for (int part = 1; part < 3; ++part) {
        if (remainders[part] > remainders[best]) best = part;
      }
      ++counts[best];
      remainders[best] = -1.0;
      ++used;
    }
    size_t offset = 0;
    for (int part = 0; part < 3; ++part) {
      for (size_t i = 0; i < counts[part]; ++i) {
        assigned[part].push_back(stratum[offset + i]);
      }
      offset += counts[part];
    }
  }

  SplitResult out;
  InteractionSet* parts[3] = {&out.train, &out.validation, &out.test};
  const char* names[3] = {"train", "validation", "test"};
  for (int part = 0; part < 3; ++part) {
    if (assigned[part].empty()) {
      throw UsageError(std::string("split fraction yields an empty ") + names[part] + " split");
    }
    std::sort(assigned[part].begin(), assigned[part].end());
    parts[part]->n_subjects = data.n_subjects;
    parts[part]->n_codes = data.n_codes;
    parts[part]->n_symptoms = data.n_symptoms;
    parts[part]->records.reserve(assigned[part].size());
    for (size_t i : assigned[part]) {
      parts[part]->records.push_back(data.records[i]);
    }
  }
  return out;
}

HitRatioCases build_hitratio_cases(const InteractionSet& positives,
                                   uint32_t n_candidates, uint64_t seed) {
  if (n_candidates < 2) throw UsageError("n_candidates must be >= 2");
  if (n_candidates > positives.n_codes) {
    throw UsageError("n_candidates exceeds the number of codes");
  }

  std::unordered_map<uint32_t, std::vector<uint32_t>> held_by_subject;
  for (const auto& r : positives.records) {
    if (r.label == 1) held_by_subject[r.subject].push_back(r.code);
  }

  HitRatioCases out;
  Rng rng(seed);
  for (uint32_t subject = 0; subject < positives.n_subjects; ++subject) {
    auto it = held_by_subject.find(subject);
    if (it == held_by_subject.end()) {
      ++out.n_skipped_subjects;
      continue;
    }
    const auto& held = it->second;
    const size_t n_spare = positives.n_codes - held.size();
    if (n_spare < n_candidates - 1) {
      ++out.n_skipped_subjects;
      continue;
    }

    HitRatioCase hr_case;
    hr_case.subject = subject;
    hr_case.held_out_positive = held[rng.next_index(held.size())];

    std::unordered_set<uint32_t> held_set(held.begin(), held.end());
    std::vector<uint32_t> spare;
    spare.reserve(n_spare);
    for (uint32_t code = 0; code < positives.n_codes; ++code) {
      if (!held_set.count(code)) spare.push_back(code);
    }
    hr_case.candidates.push_back(hr_case.held_out_positive);
    for (uint32_t pick : rng.sample_without_replacement(static_cast<uint32_t>(spare.size()),
                                                        n_candidates - 1)) {
      hr_case.candidates.push_back(spare[pick]);
    }
    out.cases.push_back(std::move(hr_case));
  }
  return out;
}

}  // namespace comorec::sampling
