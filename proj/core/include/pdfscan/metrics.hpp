#pragma once

#include <cstddef>
#include <vector>

namespace pdfscan::metrics {

struct ScoredSample {
  double score = 0.0;
  bool malicious = false;
};

// A sample is predicted malicious when score >= threshold.
struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double tpr() const;  // NaN when there are no malicious samples
  double fpr() const;  // 0 when there are no benign samples
};

Confusion confusion(const std::vector<ScoredSample>& samples,
                    double threshold);

// The threshold chosen when asked for "detection at x% FPR", plus the rates
// observed at it on the same samples.
struct OperatingPoint {
  double threshold = 0.0;
  double detection = 0.0;  // NaN when there are no malicious samples
  double fpr = 0.0;
};

// Candidate thresholds are the distinct scores plus a sentinel just above
// the maximum (which predicts nothing malicious, so its FPR is 0 and a
// feasible answer always exists). Returns the smallest candidate whose FPR
// is <= max_fpr — equivalently, the maximal detection under the budget.
// max_fpr must lie in [0, 1). Throws ContractError on an empty sample set
// or non-finite scores.
OperatingPoint detection_at_fpr(const std::vector<ScoredSample>& samples,
                                double max_fpr);

// Rates observed when a frozen threshold (typically calibrated elsewhere)
// is applied to this set. Handles single-class sets: no malicious samples
// gives detection NaN, no benign gives fpr 0.
OperatingPoint apply_threshold(const std::vector<ScoredSample>& samples,
                               double threshold);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Points ordered by descending threshold: starts at the sentinel (0, 0) and
// ends at the minimum score (1, 1), one point per distinct score. Requires
// at least one sample of each class.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc(const std::vector<ScoredSample>& samples);

// Trapezoidal area under the curve; equals the rank statistic
// P(score_mal > score_ben) + 0.5 * P(score_mal == score_ben).
double auc(const RocCurve& curve);

}  // namespace pdfscan::metrics
