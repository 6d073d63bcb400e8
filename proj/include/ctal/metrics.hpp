#pragma once

#include <utility>
#include <vector>

namespace ctal {

// Overall accuracy and mean per-class recall. Every class in [0, C) must
// appear in golds or UA is undefined.
std::pair<double, double> metric_wa_ua(const std::vector<int>& preds,
                                       const std::vector<int>& golds, int num_classes);

// Sign-binarized accuracy and positive-class F1 for score regression.
// A gold (or predicted) score of exactly 0 counts as negative.
std::pair<double, double> metric_acc2_f1(const std::vector<double>& pred_scores,
                                         const std::vector<double>& gold_scores);

std::pair<double, double> metric_mae_corr(const std::vector<double>& preds,
                                          const std::vector<double>& golds);

// Equal error rate over a threshold sweep of the pooled scores, with linear
// interpolation between the bracketing thresholds. Scores are similarities:
// higher means "same". Invariant to strictly monotone transforms.
double metric_eer(const std::vector<double>& scores_same,
                  const std::vector<double>& scores_diff);

}  // namespace ctal
