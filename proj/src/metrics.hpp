#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "sampling.hpp"

namespace comorec::metrics {

// Fraction of positions where truth and prediction agree.
double accuracy(std::span<const uint8_t> truth, std::span<const uint8_t> predicted);

struct F1Report {
  double positive = 0.0;  // F1 of the label-1 class
  double negative = 0.0;  // F1 of the label-0 class
  double macro = 0.0;     // unweighted mean of the two
  double micro = 0.0;     // pooled counts; equals accuracy for binary labels
};

// Per-class F1 = 2TP / (2TP + FP + FN), with 0/0 defined as 0.
F1Report f1_scores(std::span<const uint8_t> truth, std::span<const uint8_t> predicted);

// ROC AUC from the Mann-Whitney statistic using midranks for ties. Exactly
// equal to the pairwise definition because rank sums stay half-integers.
double roc_auc(std::span<const double> scores, std::span<const uint8_t> labels);

// O(pos * neg) reference: mean over label pairs of [s_pos > s_neg] with
// ties worth 0.5. Kept as the oracle the fast version is checked against.
double roc_auc_pairwise(std::span<const double> scores, std::span<const uint8_t> labels);

// 1-based rank of candidate `target` when sorted by score descending, ties
// broken by ascending code. A single counting pass; no sort.
uint32_t rank_of_candidate(std::span<const uint32_t> codes, std::span<const double> scores,
                           size_t target);

// Fraction of cases whose held-out positive ranks within the top k of its
// candidate list under `scorer`. Non-decreasing in k by construction.
double hit_ratio_at_k(std::span<const sampling::HitRatioCase> cases,
                      const std::function<double(uint32_t subject, uint32_t code)>& scorer,
                      uint32_t k = 10);

}  // namespace comorec::metrics
