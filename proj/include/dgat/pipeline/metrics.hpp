// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dgat/common/error.hpp"

namespace dgat {

// ROC-AUC via the rank statistic: average ranks are assigned within tie
// groups, so a tied positive/negative pair contributes exactly one half —
// identical to brute-force pair counting.
inline double roc_auc(const std::vector<double> &scores,
                      const std::vector<double> &labels) {
  if (scores.size() != labels.size())
    throw DataError("roc_auc: score/label length mismatch");
  const int n = static_cast<int>(scores.size());
  long n_pos = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw DataError("roc_auc: labels must be 0 or 1");
    if (labels[i] == 1.0) ++n_pos;
  }
  const long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("roc_auc: needs both classes present");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    // 1-based ranks i+1 .. j averaged over the tie group.
    const double avg_rank = (static_cast<double>(i + 1) + j) / 2.0;
    for (int k = i; k < j; ++k)
      if (labels[idx[k]] == 1.0) rank_sum_pos += avg_rank;
    i = j;
  }
  return (rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
         (static_cast<double>(n_pos) * n_neg);
}

inline double rmse(const std::vector<double> &pred,
                   const std::vector<double> &target) {
  if (pred.size() != target.size() || pred.empty())
    throw DataError("rmse: empty or mismatched inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return std::sqrt(acc / pred.size());
}

inline double mae(const std::vector<double> &pred,
                  const std::vector<double> &target) {
  if (pred.size() != target.size() || pred.empty())
    throw DataError("mae: empty or mismatched inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(pred[i] - target[i]);
  return acc / pred.size();
}

} // namespace dgat
