#pragma once

#include <array>
#include <compare>
#include <string>
#include <vector>

#include "xsig/market_data.hpp"
#include "xsig/strategy_signals.hpp"

namespace xsig {

/// One positive integer weight per strategy, in StrategyMatrix column order.
struct WeightVector {
  std::array<int, kNumStrategies> w{1, 1, 1, 1, 1};

  auto operator<=>(const WeightVector&) const = default;
  int sum() const;
  void validate() const;
};

/// Pre-quantization weighted mean sum(w_i s_i) / sum(w_i).
double weighted_mean(const SignalRow& s, const WeightVector& w);

/// Weighted mean rounded half away from zero, clamped to [-3, 3].
/// Computed in integer arithmetic so ties are exact.
SignalLevel weighted_vote(const SignalRow& s, const WeightVector& w);

/// Fused signal per StrategyMatrix row; z[r] belongs to series index offset + r.
struct TargetSeries {
  int horizon = 1;
  LevelSeries z;
  std::vector<Date> dates;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return z.size(); }
};

TargetSeries make_target(const StrategyMatrix& matrix, const WeightVector& w, int horizon);

/// Half-open range of TargetSeries rows.
struct RowRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
};

struct AccuracyResult {
  double accuracy = 0.0;
  Eigen::Index correct = 0;
  /// Non-hold predictions in the window (the denominator).
  Eigen::Index decisions = 0;
  /// Set when every prediction in the window is hold; accuracy is then 0.
  bool no_decisions = false;
};

/// A non-hold prediction on row d is correct iff its sign equals
/// sign(close[d + horizon] - close[d]).
AccuracyResult evaluate_accuracy(const TargetSeries& z, const OhlcvSeries& series, RowRange window);

struct GridSearchResult {
  int horizon = 1;
  WeightVector best_weights;
  double best_accuracy = 0.0;
  Eigen::Index best_correct = 0;
  Eigen::Index best_decisions = 0;
  bool no_decisions = false;
  std::size_t evaluated = 0;
  RowRange holdout;
};

/// Rows that grid_search scores: the chronological tail of
/// ceil(eval_fraction * rows), minus trailing rows with no day d + horizon.
RowRange holdout_window(const StrategyMatrix& matrix, const OhlcvSeries& series, int horizon,
                        double eval_fraction);

/// Exhaustive search over weight_range^5. Ties keep the lexicographically
/// smallest weight vector.
GridSearchResult grid_search(const StrategyMatrix& matrix, const OhlcvSeries& series, int horizon,
                             std::vector<int> weight_range, double eval_fraction = 0.2);

}  // namespace xsig
