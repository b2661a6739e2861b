#include "pdfscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdfscan/errors.hpp"

namespace pdfscan::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_samples(const std::vector<ScoredSample>& samples) {
  if (samples.empty()) throw ContractError("empty sample set");
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) {
      throw ContractError("non-finite score in sample set");
    }
  }
}

// One point per distinct score, descending: cumulative positives/negatives
// at or above that score. Shared by the ROC and threshold-picking paths.
struct SweepPoint {
  double threshold;
  std::size_t tp, fp;
};

struct Sweep {
  std::vector<SweepPoint> points;  // starts with the above-max sentinel
  std::size_t n_pos = 0, n_neg = 0;
};

Sweep sweep_thresholds(std::vector<ScoredSample> samples) {
  Sweep sw;
  std::sort(samples.begin(), samples.end(),
            [](const ScoredSample& a, const ScoredSample& b) {
              return a.score > b.score;
            });
  for (const auto& s : samples) {
    if (s.malicious) {
      ++sw.n_pos;
    } else {
      ++sw.n_neg;
    }
  }
  const double sentinel =
      std::nextafter(samples.front().score, std::numeric_limits<double>::infinity());
  sw.points.push_back({sentinel, 0, 0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < samples.size();) {
    const double score = samples[i].score;
    while (i < samples.size() && samples[i].score == score) {
      if (samples[i].malicious) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    sw.points.push_back({score, tp, fp});
  }
  return sw;
}

double rate(std::size_t num, std::size_t den, double when_empty) {
  return den == 0 ? when_empty : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double Confusion::tpr() const { return rate(tp, tp + fn, kNaN); }
double Confusion::fpr() const { return rate(fp, fp + tn, 0.0); }

Confusion confusion(const std::vector<ScoredSample>& samples,
                    double threshold) {
  check_samples(samples);
  Confusion c;
  for (const auto& s : samples) {
    const bool predicted = s.score >= threshold;
    if (s.malicious) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

OperatingPoint detection_at_fpr(const std::vector<ScoredSample>& samples,
                                double max_fpr) {
  check_samples(samples);
  if (!(max_fpr >= 0.0 && max_fpr < 1.0)) {
    throw ContractError("max_fpr must lie in [0, 1)");
  }
  const Sweep sw = sweep_thresholds(samples);
  // Thresholds descend through the sweep while FPR rises, so the last
  // feasible point is the smallest feasible threshold. The sentinel has
  // FPR 0, so there is always at least one.
  OperatingPoint best;
  bool found = false;
  for (const auto& p : sw.points) {
    const double fpr = rate(p.fp, sw.n_neg, 0.0);
    if (fpr <= max_fpr) {
      best.threshold = p.threshold;
      best.detection = rate(p.tp, sw.n_pos, kNaN);
      best.fpr = fpr;
      found = true;
    }
  }
  if (!found) throw ContractError("no feasible threshold");  // unreachable
  return best;
}

OperatingPoint apply_threshold(const std::vector<ScoredSample>& samples,
                               double threshold) {
  const Confusion c = confusion(samples, threshold);
  return {threshold, c.tpr(), c.fpr()};
}

RocCurve roc(const std::vector<ScoredSample>& samples) {
  check_samples(samples);
  const Sweep sw = sweep_thresholds(samples);
  if (sw.n_pos == 0 || sw.n_neg == 0) {
    throw ContractError("roc needs at least one sample of each class");
  }
  RocCurve curve;
  for (const auto& p : sw.points) {
    curve.points.push_back({p.threshold, rate(p.fp, sw.n_neg, 0.0),
                            rate(p.tp, sw.n_pos, 0.0)});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.points.size() < 2) throw ContractError("roc curve too short");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (b.tpr + a.tpr) * 0.5;
  }
  return area;
}

}  // namespace pdfscan::metrics
