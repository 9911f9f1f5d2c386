#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace comorec::metrics {

namespace {

void check_aligned(size_t a, size_t b, const char* what) {
  if (a == 0) {
    throw UsageError(std::string(what) + " of an empty vector is undefined");
  }
  if (a != b) {
    throw UsageError(std::string(what) + ": got " + std::to_string(a) + " and " +
                     std::to_string(b) + " entries");
  }
}

void check_binary(std::span<const uint8_t> v) {
  for (uint8_t x : v) {
    if (x > 1) {
      throw DataError("labels must be 0 or 1, got " + std::to_string(static_cast<int>(x)));
    }
  }
}

void check_finite(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw NumericError("score vector contains a non-finite value");
    }
  }
}

}  // namespace

double accuracy(std::span<const uint8_t> truth, std::span<const uint8_t> predicted) {
  check_aligned(truth.size(), predicted.size(), "accuracy");
  check_binary(truth);
  check_binary(predicted);
  uint64_t correct = 0;
  for (size_t i = 0; i < truth.size(); i++) {
    if (truth[i] == predicted[i]) correct++;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

F1Report f1_scores(std::span<const uint8_t> truth, std::span<const uint8_t> predicted) {
  check_aligned(truth.size(), predicted.size(), "f1");
  check_binary(truth);
  check_binary(predicted);

  // tp[k], fp[k], fn[k] with class k as the positive.
  uint64_t tp[2] = {0, 0};
  uint64_t fp[2] = {0, 0};
  uint64_t fn[2] = {0, 0};
  for (size_t i = 0; i < truth.size(); i++) {
    if (truth[i] == predicted[i]) {
      tp[truth[i]]++;
    } else {
      fp[predicted[i]]++;
      fn[truth[i]]++;
    }
  }

  auto f1_of = [](uint64_t t, uint64_t f_pos, uint64_t f_neg) {
    uint64_t denom = 2 * t + f_pos + f_neg;
    if (denom == 0) return 0.0;
    return static_cast<double>(2 * t) / static_cast<double>(denom);
  };

  F1Report report;
  report.negative = f1_of(tp[0], fp[0], fn[0]);
  report.positive = f1_of(tp[1], fp[1], fn[1]);
  report.macro = (report.negative + report.positive) / 2.0;
  report.micro = f1_of(tp[0] + tp[1], fp[0] + fp[1], fn[0] + fn[1]);
  return report;
}

double roc_auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_aligned(scores.size(), labels.size(), "auc");
  check_binary(labels);
  check_finite(scores);

  size_t n = scores.size();
  uint64_t n_pos = 0;
  for (uint8_t l : labels) n_pos += l;
  uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auc needs at least one positive and one negative label");
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Walk tie groups in score order; every member of a group takes the
  // group's midrank, which keeps the rank sum a half-integer (exact in a
  // double) and makes the result identical to the pairwise count.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) j++;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; k++) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j + 1;
  }

  double u = rank_sum_pos -
             static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc_pairwise(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_aligned(scores.size(), labels.size(), "auc");
  check_binary(labels);
  check_finite(scores);

  uint64_t n_pos = 0;
  for (uint8_t l : labels) n_pos += l;
  uint64_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auc needs at least one positive and one negative label");
  }

  double wins = 0.0;  // half-integers only, so the sum stays exact
  for (size_t p = 0; p < scores.size(); p++) {
    if (labels[p] != 1) continue;
    for (size_t q = 0; q < scores.size(); q++) {
      if (labels[q] != 0) continue;
      if (scores[p] > scores[q]) {
        wins += 1.0;
      } else if (scores[p] == scores[q]) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

uint32_t rank_of_candidate(std::span<const uint32_t> codes, std::span<const double> scores,
                           size_t target) {
  check_aligned(codes.size(), scores.size(), "rank");
  check_finite(scores);
  if (target >= codes.size()) {
    throw UsageError("rank target " + std::to_string(target) + " out of range");
  }
  uint32_t ahead = 0;
  for (size_t i = 0; i < codes.size(); i++) {
    if (i == target) continue;
    if (scores[i] > scores[target] ||
        (scores[i] == scores[target] && codes[i] < codes[target])) {
      ahead++;
    }
  }
  return ahead + 1;
}

double hit_ratio_at_k(std::span<const sampling::HitRatioCase> cases,
                      const std::function<double(uint32_t subject, uint32_t code)>& scorer,
                      uint32_t k) {
  if (cases.empty()) {
    throw UsageError("hit ratio over zero cases is undefined");
  }
  if (k < 1) {
    throw UsageError("k must be positive");
  }
  uint64_t hits = 0;
  std::vector<double> scores;
  for (const auto& hr_case : cases) {
    if (k > hr_case.candidates.size()) {
      throw UsageError("k = " + std::to_string(k) + " exceeds the candidate count of " +
                       std::to_string(hr_case.candidates.size()));
    }
    if (hr_case.candidates.empty() || hr_case.candidates.front() != hr_case.held_out_positive) {
      throw UsageError("malformed case: held-out code must lead the candidate list");
    }
    scores.clear();
    for (uint32_t code : hr_case.candidates) {
      scores.push_back(scorer(hr_case.subject, code));
    }
    if (rank_of_candidate(hr_case.candidates, scores, 0) <= k) hits++;
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

}  // namespace comorec::metrics
