#pragma once

#include <cstdint>
#include <vector>

#include "core.hpp"
#include "notes.hpp"

namespace comorec::sampling {

struct NegRatio {
  uint32_t negatives_per_positive = 4;  // presets: 10, 4, 2
};

struct SplitSpec {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  uint64_t seed = 0;
};

struct HitRatioCase {
  uint32_t subject = 0;
  uint32_t held_out_positive = 0;
  // includes the held-out positive; the others are codes the subject has no
  // positive interaction with, sampled without replacement
  std::vector<uint32_t> candidates;
};

// Appends ratio * |positives| label-0 records, each a uniformly sampled
// (subject, code) pair absent from the positive set. Repeats among negatives
// are allowed; only collisions with positives are rejected.
InteractionSet generate_negative_pairs(const InteractionSet& positives,
                                       NegRatio ratio, uint64_t seed);

struct TripleResult {
  InteractionSet interactions;
  size_t n_dropped_positives = 0;  // positives whose subject has no symptoms
};

// Triple variant: every positive gains one uniformly drawn symptom of its
// subject; negatives combine a subject, a code they do not have, and one of
// that subject's own symptoms. Subjects absent from the symptom table are
// dropped from the dataset and counted.
TripleResult generate_negative_triples(const InteractionSet& positives,
                                       const notes::SubjectSymptomTable& symptoms,
                                       NegRatio ratio, uint64_t seed);

struct SplitResult {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
};

// Disjoint, exhaustive, label-stratified partition; largest-remainder
// allocation keeps each split's positive fraction within one record of the
// global fraction.
SplitResult split(const InteractionSet& data, const SplitSpec& spec);

struct HitRatioCases {
  std::vector<HitRatioCase> cases;
  size_t n_skipped_subjects = 0;  // too few positives or too few spare codes
};

// One case per eligible subject: one positive held out uniformly plus
// n_candidates - 1 distinct non-positive codes.
HitRatioCases build_hitratio_cases(const InteractionSet& positives,
                                   uint32_t n_candidates, uint64_t seed);

}  // namespace comorec::sampling
