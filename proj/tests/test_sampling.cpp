#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "notes.hpp"
#include "sampling.hpp"

using namespace comorec;
using namespace comorec::sampling;

namespace {

// A dense little positive set: subjects 0..n_subjects-1 each positive with
// code (subject % n_codes), so the negative universe stays large.
InteractionSet toy_positives(uint32_t n_subjects, uint32_t n_codes) {
  InteractionSet set;
  set.n_subjects = n_subjects;
  set.n_codes = n_codes;
  for (uint32_t s = 0; s < n_subjects; ++s) {
    set.records.push_back(Interaction{s, s % n_codes, std::nullopt, 1});
  }
  return set;
}

std::unordered_set<uint64_t> keys_of(const InteractionSet& set, uint8_t label) {
  std::unordered_set<uint64_t> keys;
  for (const auto& r : set.records) {
    if (r.label == label) keys.insert(pair_key(r.subject, r.code));
  }
  return keys;
}

notes::SubjectSymptomTable toy_symptoms(
    const std::vector<std::pair<uint32_t, std::vector<uint32_t>>>& entries,
    uint32_t n_symptoms) {
  notes::SubjectSymptomTable table;
  for (const auto& [subject, symptoms] : entries) {
    table.by_subject[subject] = symptoms;
  }
  table.n_symptoms = n_symptoms;
  return table;
}

}  // namespace

TEST_CASE("generate_negative_pairs appends the exact number of clean negatives") {
  auto positives = toy_positives(20, 10);
  auto out = generate_negative_pairs(positives, NegRatio{4}, 7);

  CHECK(out.n_subjects == 20);
  CHECK(out.n_codes == 10);
  CHECK(out.count_label(1) == 20);
  CHECK(out.count_label(0) == 80);
  REQUIRE(out.records.size() == 100);

  // Positives come first, untouched.
  for (size_t i = 0; i < 20; ++i) {
    CHECK(out.records[i].subject == positives.records[i].subject);
    CHECK(out.records[i].label == 1);
  }

  // No negative collides with any positive pair.
  auto pos_keys = keys_of(out, 1);
  for (const auto& r : out.records) {
    if (r.label == 0) {
      CHECK(pos_keys.count(pair_key(r.subject, r.code)) == 0);
      CHECK(r.subject < 20);
      CHECK(r.code < 10);
      CHECK_FALSE(r.symptom.has_value());
    }
  }
}

TEST_CASE("generate_negative_pairs is deterministic in the seed") {
  auto positives = toy_positives(15, 8);
  auto a = generate_negative_pairs(positives, NegRatio{3}, 42);
  auto b = generate_negative_pairs(positives, NegRatio{3}, 42);
  auto c = generate_negative_pairs(positives, NegRatio{3}, 43);

  REQUIRE(a.records.size() == b.records.size());
  bool identical = true;
  for (size_t i = 0; i < a.records.size(); ++i) {
    identical = identical && a.records[i].subject == b.records[i].subject &&
                a.records[i].code == b.records[i].code;
  }
  CHECK(identical);

  bool differs = a.records.size() != c.records.size();
  for (size_t i = 0; !differs && i < a.records.size(); ++i) {
    differs = a.records[i].subject != c.records[i].subject ||
              a.records[i].code != c.records[i].code;
  }
  CHECK(differs);
}

TEST_CASE("generate_negative_pairs allows repeated negatives but never positives") {
  // 2 subjects x 2 codes with 2 positives leaves only 2 free cells; at ratio 4
  // the 8 negatives must reuse them.
  InteractionSet positives;
  positives.n_subjects = 2;
  positives.n_codes = 2;
  positives.records.push_back(Interaction{0, 0, std::nullopt, 1});
  positives.records.push_back(Interaction{1, 1, std::nullopt, 1});

  auto out = generate_negative_pairs(positives, NegRatio{4}, 3);
  CHECK(out.count_label(0) == 8);
  for (const auto& r : out.records) {
    if (r.label == 0) {
      bool is_free_cell = (r.subject == 0 && r.code == 1) || (r.subject == 1 && r.code == 0);
      CHECK(is_free_cell);
    }
  }
}

TEST_CASE("generate_negative_pairs rejects a ratio below one") {
  auto positives = toy_positives(5, 5);
  CHECK_THROWS_WITH_AS(generate_negative_pairs(positives, NegRatio{0}, 0),
                       "negative ratio must be >= 1", UsageError);
}

TEST_CASE("generate_negative_pairs fails cleanly when every pair is positive") {
  InteractionSet positives;
  positives.n_subjects = 2;
  positives.n_codes = 2;
  for (uint32_t s = 0; s < 2; ++s) {
    for (uint32_t c = 0; c < 2; ++c) {
      positives.records.push_back(Interaction{s, c, std::nullopt, 1});
    }
  }
  CHECK_THROWS_WITH_AS(generate_negative_pairs(positives, NegRatio{2}, 0),
                       "insufficient negative space", DataError);
}

TEST_CASE("generate_negative_triples pins each record to its subject's own symptoms") {
  auto positives = toy_positives(6, 4);
  auto table = toy_symptoms({{0, {0, 1}}, {1, {2}}, {2, {0}}, {3, {1, 2}}, {4, {2}}, {5, {0}}}, 3);

  auto result = generate_negative_triples(positives, table, NegRatio{2}, 11);
  const auto& set = result.interactions;
  CHECK(result.n_dropped_positives == 0);
  CHECK(set.n_symptoms == 3);
  CHECK(set.count_label(1) == 6);
  CHECK(set.count_label(0) == 12);

  auto pos_keys = keys_of(set, 1);
  for (const auto& r : set.records) {
    REQUIRE(r.symptom.has_value());
    const auto& pool = table.symptoms_of(r.subject);
    CHECK(std::count(pool.begin(), pool.end(), *r.symptom) == 1);
    if (r.label == 0) CHECK(pos_keys.count(pair_key(r.subject, r.code)) == 0);
  }
}

TEST_CASE("generate_negative_triples drops and counts positives without symptoms") {
  auto positives = toy_positives(4, 4);
  auto table = toy_symptoms({{0, {0}}, {2, {1}}}, 2);  // subjects 1 and 3 have no notes

  auto result = generate_negative_triples(positives, table, NegRatio{3}, 5);
  CHECK(result.n_dropped_positives == 2);
  CHECK(result.interactions.count_label(1) == 2);
  CHECK(result.interactions.count_label(0) == 6);
  for (const auto& r : result.interactions.records) {
    bool eligible = r.subject == 0 || r.subject == 2;
    CHECK(eligible);
  }
}

TEST_CASE("generate_negative_triples needs at least one subject with symptoms") {
  auto positives = toy_positives(3, 3);
  notes::SubjectSymptomTable empty;
  CHECK_THROWS_WITH_AS(generate_negative_triples(positives, empty, NegRatio{2}, 0),
                       "no symptoms for any subject", DataError);

  // A non-empty table that misses every positive subject is just as fatal.
  auto off_target = toy_symptoms({{7, {0}}}, 1);
  CHECK_THROWS_WITH_AS(generate_negative_triples(positives, off_target, NegRatio{2}, 0),
                       "no symptoms for any subject", DataError);
}

TEST_CASE("generate_negative_triples is deterministic in the seed") {
  auto positives = toy_positives(8, 5);
  auto table = toy_symptoms(
      {{0, {0, 1}}, {1, {1}}, {2, {0}}, {3, {2}}, {4, {1, 2}}, {5, {0}}, {6, {2}}, {7, {1}}}, 3);
  auto a = generate_negative_triples(positives, table, NegRatio{4}, 9);
  auto b = generate_negative_triples(positives, table, NegRatio{4}, 9);
  REQUIRE(a.interactions.records.size() == b.interactions.records.size());
  bool identical = true;
  for (size_t i = 0; i < a.interactions.records.size(); ++i) {
    const auto& x = a.interactions.records[i];
    const auto& y = b.interactions.records[i];
    identical = identical && x.subject == y.subject && x.code == y.code &&
                x.symptom == y.symptom && x.label == y.label;
  }
  CHECK(identical);
}

TEST_CASE("split partitions every record exactly once") {
  auto data = generate_negative_pairs(toy_positives(30, 12), NegRatio{4}, 1);
  auto result = split(data, SplitSpec{0.8, 0.1, 0.1, 21});

  CHECK(result.train.records.size() + result.validation.records.size() +
            result.test.records.size() ==
        data.records.size());
  CHECK(result.train.records.size() == 120);
  CHECK(result.validation.records.size() == 15);
  CHECK(result.test.records.size() == 15);
  CHECK(result.train.n_subjects == data.n_subjects);
  CHECK(result.test.n_codes == data.n_codes);

  // Multiset of (subject, code, label) across splits matches the input.
  auto multiset_of = [](const InteractionSet& set) {
    std::multiset<std::tuple<uint32_t, uint32_t, int>> out;
    for (const auto& r : set.records) out.emplace(r.subject, r.code, r.label);
    return out;
  };
  auto combined = multiset_of(result.train);
  auto val = multiset_of(result.validation);
  auto test = multiset_of(result.test);
  combined.insert(val.begin(), val.end());
  combined.insert(test.begin(), test.end());
  CHECK(combined == multiset_of(data));
}

TEST_CASE("split stratifies by label to within one record") {
  auto data = generate_negative_pairs(toy_positives(50, 20), NegRatio{4}, 2);
  auto result = split(data, SplitSpec{0.8, 0.1, 0.1, 4});

  // 50 positives -> exactly 40/5/5; 200 negatives -> exactly 160/20/20.
  CHECK(result.train.count_label(1) == 40);
  CHECK(result.validation.count_label(1) == 5);
  CHECK(result.test.count_label(1) == 5);
  CHECK(result.train.count_label(0) == 160);
  CHECK(result.validation.count_label(0) == 20);
  CHECK(result.test.count_label(0) == 20);
}

TEST_CASE("split is deterministic in the seed and sensitive to it") {
  auto data = generate_negative_pairs(toy_positives(25, 10), NegRatio{2}, 3);
  auto a = split(data, SplitSpec{0.8, 0.1, 0.1, 5});
  auto b = split(data, SplitSpec{0.8, 0.1, 0.1, 5});
  auto c = split(data, SplitSpec{0.8, 0.1, 0.1, 6});

  auto fingerprint = [](const InteractionSet& set) {
    std::vector<std::pair<uint32_t, uint32_t>> out;
    for (const auto& r : set.records) out.emplace_back(r.subject, r.code);
    return out;
  };
  CHECK(fingerprint(a.test) == fingerprint(b.test));
  CHECK(fingerprint(a.test) != fingerprint(c.test));
}

TEST_CASE("split keeps records in their original relative order") {
  auto data = generate_negative_pairs(toy_positives(30, 12), NegRatio{2}, 8);
  auto result = split(data, SplitSpec{0.8, 0.1, 0.1, 13});

  // Positives were appended before negatives, so within each split every
  // label-1 record must precede every label-0 record.
  for (const InteractionSet* part :
       {&result.train, &result.validation, &result.test}) {
    bool seen_negative = false;
    for (const auto& r : part->records) {
      if (r.label == 0) seen_negative = true;
      if (seen_negative) CHECK(r.label == 0);
    }
  }
}

TEST_CASE("split validates fractions and minimum size") {
  auto data = generate_negative_pairs(toy_positives(20, 10), NegRatio{2}, 0);
  CHECK_THROWS_WITH_AS(split(data, SplitSpec{0.0, 0.5, 0.5, 0}),
                       "split fractions must be positive", UsageError);
  CHECK_THROWS_WITH_AS(split(data, SplitSpec{0.7, 0.1, 0.1, 0}),
                       "split fractions must sum to 1", UsageError);

  InteractionSet tiny;
  tiny.n_subjects = 3;
  tiny.n_codes = 3;
  for (uint32_t s = 0; s < 3; ++s) tiny.records.push_back(Interaction{s, s, std::nullopt, 1});
  CHECK_THROWS_WITH_AS(split(tiny, SplitSpec{0.8, 0.1, 0.1, 0}),
                       "need at least 10 records to split", UsageError);
}

TEST_CASE("split refuses fractions that starve a part") {
  // 10 single-label records at 1% validation: largest-remainder hands the
  // leftover to train, leaving validation empty.
  InteractionSet data;
  data.n_subjects = 10;
  data.n_codes = 10;
  for (uint32_t s = 0; s < 10; ++s) data.records.push_back(Interaction{s, s, std::nullopt, 1});
  CHECK_THROWS_WITH_AS(split(data, SplitSpec{0.98, 0.01, 0.01, 0}),
                       "split fraction yields an empty validation split", UsageError);
}

TEST_CASE("build_hitratio_cases holds out one positive against distinct spares") {
  auto positives = toy_positives(12, 10);
  auto result = build_hitratio_cases(positives, 5, 17);
  CHECK(result.n_skipped_subjects == 0);
  REQUIRE(result.cases.size() == 12);

  for (const auto& hr_case : result.cases) {
    REQUIRE(hr_case.candidates.size() == 5);
    CHECK(hr_case.candidates[0] == hr_case.held_out_positive);
    CHECK(hr_case.held_out_positive == hr_case.subject % 10);

    std::set<uint32_t> unique(hr_case.candidates.begin(), hr_case.candidates.end());
    CHECK(unique.size() == 5);
    for (size_t i = 1; i < hr_case.candidates.size(); ++i) {
      CHECK(hr_case.candidates[i] != hr_case.held_out_positive);
    }
  }
}

TEST_CASE("build_hitratio_cases skips subjects without positives or spare codes") {
  InteractionSet positives;
  positives.n_subjects = 3;
  positives.n_codes = 4;
  // Subject 0 has every code (no spares); subject 1 has one; subject 2 none.
  for (uint32_t c = 0; c < 4; ++c) positives.records.push_back(Interaction{0, c, std::nullopt, 1});
  positives.records.push_back(Interaction{1, 0, std::nullopt, 1});

  auto result = build_hitratio_cases(positives, 4, 0);
  CHECK(result.n_skipped_subjects == 2);
  REQUIRE(result.cases.size() == 1);
  CHECK(result.cases[0].subject == 1);
  CHECK(result.cases[0].held_out_positive == 0);
}

TEST_CASE("build_hitratio_cases validates the candidate count") {
  auto positives = toy_positives(5, 5);
  CHECK_THROWS_WITH_AS(build_hitratio_cases(positives, 1, 0),
                       "n_candidates must be >= 2", UsageError);
  CHECK_THROWS_WITH_AS(build_hitratio_cases(positives, 6, 0),
                       "n_candidates exceeds the number of codes", UsageError);
}

TEST_CASE("build_hitratio_cases is deterministic in the seed") {
  auto positives = toy_positives(10, 8);
  auto a = build_hitratio_cases(positives, 4, 99);
  auto b = build_hitratio_cases(positives, 4, 99);
  REQUIRE(a.cases.size() == b.cases.size());
  bool identical = true;
  for (size_t i = 0; i < a.cases.size(); ++i) {
    identical = identical && a.cases[i].subject == b.cases[i].subject &&
                a.cases[i].candidates == b.cases[i].candidates;
  }
  CHECK(identical);
}
