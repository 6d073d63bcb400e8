#include "ctal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ctal/errors.hpp"

namespace ctal {

std::pair<double, double> metric_wa_ua(const std::vector<int>& preds,
                                       const std::vector<int>& golds, int num_classes) {
  if (preds.size() != golds.size() || preds.empty())
    throw MetricError("wa/ua: prediction and gold lists must be non-empty and equal length");
  std::vector<long> correct(num_classes, 0), total(num_classes, 0);
  long hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (golds[i] < 0 || golds[i] >= num_classes)
      throw MetricError("wa/ua: gold label " + std::to_string(golds[i]) + " out of range");
    ++total[golds[i]];
    if (preds[i] == golds[i]) {
      ++hits;
      ++correct[golds[i]];
    }
  }
  double ua = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (total[c] == 0)
      throw MetricError("ua undefined: class " + std::to_string(c) +
                        " absent from gold labels");
    ua += static_cast<double>(correct[c]) / total[c];
  }
  return {static_cast<double>(hits) / preds.size(), ua / num_classes};
}

std::pair<double, double> metric_acc2_f1(const std::vector<double>& pred_scores,
                                         const std::vector<double>& gold_scores) {
  if (pred_scores.size() != gold_scores.size() || pred_scores.empty())
    throw MetricError("acc2/f1: score lists must be non-empty and equal length");
  long tp = 0, fp = 0, fn = 0, hits = 0;
  for (size_t i = 0; i < pred_scores.size(); ++i) {
    const bool p = pred_scores[i] > 0.0;  // zero counts as negative
    const bool g = gold_scores[i] > 0.0;
    if (p == g) ++hits;
    if (p && g) ++tp;
    if (p && !g) ++fp;
    if (!p && g) ++fn;
  }
  const double acc = static_cast<double>(hits) / pred_scores.size();
  const double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  const double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
  return {acc, f1};
}

std::pair<double, double> metric_mae_corr(const std::vector<double>& preds,
                                          const std::vector<double>& golds) {
  if (preds.size() != golds.size() || preds.size() < 2)
    throw MetricError("mae/corr: need at least two paired scores");
  const double n = static_cast<double>(preds.size());
  double mae = 0, mp = 0, mg = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    mae += std::abs(preds[i] - golds[i]);
    mp += preds[i];
    mg += golds[i];
  }
  mae /= n;
  mp /= n;
  mg /= n;
  double spp = 0, sgg = 0, spg = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    spp += (preds[i] - mp) * (preds[i] - mp);
    sgg += (golds[i] - mg) * (golds[i] - mg);
    spg += (preds[i] - mp) * (golds[i] - mg);
  }
  if (spp == 0.0 || sgg == 0.0)
    throw MetricError("corr undefined: zero variance in scores");
  return {mae, spg / std::sqrt(spp * sgg)};
}

double metric_eer(const std::vector<double>& scores_same,
                  const std::vector<double>& scores_diff) {
  if (scores_same.empty() || scores_diff.empty())
    throw MetricError("eer: both score sets must be non-empty");

  // Candidate thresholds: every distinct score. Accept means score >= theta,
  // so FAR falls and FRR rises as theta sweeps upward.
  std::vector<double> same = scores_same, diff = scores_diff;
  std::sort(same.begin(), same.end());
  std::sort(diff.begin(), diff.end());
  std::vector<double> thresholds;
  thresholds.reserve(same.size() + diff.size());
  std::merge(same.begin(), same.end(), diff.begin(), diff.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double ns = static_cast<double>(same.size());
  const double nd = static_cast<double>(diff.size());
  auto far_at = [&](double theta) {
    // fraction of different-pair scores >= theta
    return static_cast<double>(diff.end() -
                               std::lower_bound(diff.begin(), diff.end(), theta)) / nd;
  };
  auto frr_at = [&](double theta) {
    // fraction of same-pair scores < theta
    return static_cast<double>(std::lower_bound(same.begin(), same.end(), theta) -
                               same.begin()) / ns;
  };

  // Below the lowest score FAR=1, FRR=0. Find the first threshold where the
  // difference crosses zero and interpolate linearly between the bracketing
  // operating points.
  double f_prev = 1.0, r_prev = 0.0;
  for (double theta : thresholds) {
    const double f = far_at(theta);
    const double r = frr_at(theta);
    if (f <= r) {
      const double d_prev = f_prev - r_prev;  // >= 0
      const double d_cur = f - r;             // <= 0
      if (d_prev - d_cur == 0.0) return (f + r) / 2.0;
      const double t = d_prev / (d_prev - d_cur);
      return r_prev + t * (r - r_prev);
    }
    f_prev = f;
    r_prev = r;
  }
  // Thresholds exhausted: accept-nothing end point (FAR=0, FRR=1).
  {
    const double d_prev = f_prev - r_prev;
    const double d_cur = 0.0 - 1.0;
    const double t = d_prev / (d_prev - d_cur);
    return r_prev + t * (1.0 - r_prev);
  }
}

}  // namespace ctal
