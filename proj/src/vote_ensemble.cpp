#include "xsig/vote_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "xsig/errors.hpp"

namespace xsig {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void check_horizon(int horizon) {
  if (horizon != 1 && horizon != 5) throw ArgumentError("horizon must be 1 or 5");
}

}  // namespace

int WeightVector::sum() const {
  int total = 0;
  for (int v : w) total += v;
  return total;
}

void WeightVector::validate() const {
  for (int v : w) {
    if (v < 1) throw ArgumentError("weights must all be >= 1");
  }
}

double weighted_mean(const SignalRow& s, const WeightVector& w) {
  long num = 0;
  for (int i = 0; i < kNumStrategies; ++i) num += static_cast<long>(w.w[i]) * s[i];
  return static_cast<double>(num) / static_cast<double>(w.sum());
}

SignalLevel weighted_vote(const SignalRow& s, const WeightVector& w) {
  long num = 0;
  for (int i = 0; i < kNumStrategies; ++i) num += static_cast<long>(w.w[i]) * s[i];
  const long den = w.sum();
  // round(|num| / den) with halves going up, i.e. away from zero after re-signing
  const long mag = (2 * std::labs(num) + den) / (2 * den);
  const long level = std::min<long>(mag, kMaxLevel);
  return static_cast<SignalLevel>(num < 0 ? -level : level);
}

TargetSeries make_target(const StrategyMatrix& matrix, const WeightVector& w, int horizon) {
  check_horizon(horizon);
  w.validate();
  TargetSeries t;
  t.horizon = horizon;
  t.dates = matrix.dates;
  t.offset = matrix.offset;
  t.z.resize(matrix.rows());
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) t.z[r] = weighted_vote(matrix.row(r), w);
  return t;
}

AccuracyResult evaluate_accuracy(const TargetSeries& z, const OhlcvSeries& series, RowRange window) {
  if (window.begin < 0 || window.end < window.begin || window.end > z.size()) {
    throw ArgumentError("evaluate_accuracy: window outside target series");
  }
  if (window.size() > 0 && z.offset + window.end - 1 + z.horizon >= series.size()) {
    throw ArgumentError("evaluate_accuracy: window exceeds series minus horizon");
  }
  AccuracyResult res;
  for (Eigen::Index r = window.begin; r < window.end; ++r) {
    const int predicted = sign_of(z.z[r]);
    if (predicted == 0) continue;
    const Eigen::Index d = z.offset + r;
    ++res.decisions;
    if (predicted == sign_of(series.close[d + z.horizon] - series.close[d])) ++res.correct;
  }
  res.no_decisions = res.decisions == 0;
  res.accuracy = res.no_decisions ? 0.0
                                  : static_cast<double>(res.correct) / static_cast<double>(res.decisions);
  return res;
}

RowRange holdout_window(const StrategyMatrix& matrix, const OhlcvSeries& series, int horizon,
                        double eval_fraction) {
  check_horizon(horizon);
  if (!(eval_fraction > 0.0 && eval_fraction <= 1.0)) {
    throw ArgumentError("holdout fraction must be in (0, 1]");
  }
  const Eigen::Index n = matrix.rows();
  const auto h = static_cast<Eigen::Index>(std::ceil(eval_fraction * static_cast<double>(n) - 1e-9));
  const Eigen::Index last_evaluable = std::min(n, series.size() - horizon - matrix.offset);
  RowRange window{n - h, last_evaluable};
  if (h <= horizon || window.size() <= 0) {
    throw ArgumentError("holdout of " + std::to_string(h) + " rows is shorter than horizon " +
                        std::to_string(horizon));
  }
  return window;
}

GridSearchResult grid_search(const StrategyMatrix& matrix, const OhlcvSeries& series, int horizon,
                             std::vector<int> weight_range, double eval_fraction) {
  if (weight_range.empty()) throw ArgumentError("grid_search: empty weight range");
  std::sort(weight_range.begin(), weight_range.end());
  weight_range.erase(std::unique(weight_range.begin(), weight_range.end()), weight_range.end());
  if (weight_range.front() < 1) throw ArgumentError("grid_search: weights must be >= 1");

  const RowRange window = holdout_window(matrix, series, horizon, eval_fraction);

  // Realized direction per holdout row is shared by every combination.
  std::vector<int> realized(static_cast<std::size_t>(window.size()));
  for (Eigen::Index r = window.begin; r < window.end; ++r) {
    const Eigen::Index d = matrix.offset + r;
    realized[static_cast<std::size_t>(r - window.begin)] =
        sign_of(series.close[d + horizon] - series.close[d]);
  }

  GridSearchResult best;
  best.horizon = horizon;
  best.holdout = window;
  bool have_best = false;

  const std::size_t base = weight_range.size();
  std::array<std::size_t, kNumStrategies> digit{};
  std::size_t evaluated = 0;
  while (true) {
    WeightVector w;
    for (int i = 0; i < kNumStrategies; ++i) w.w[i] = weight_range[digit[i]];

    Eigen::Index correct = 0;
    Eigen::Index decisions = 0;
    for (Eigen::Index r = window.begin; r < window.end; ++r) {
      const int predicted = weighted_vote(matrix.row(r), w);
      if (predicted == 0) continue;
      ++decisions;
      if ((predicted > 0 ? 1 : -1) == realized[static_cast<std::size_t>(r - window.begin)]) {
        ++correct;
      }
    }
    const double acc = decisions == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(decisions);
    ++evaluated;
    // Lexicographic enumeration order + strict improvement = smallest-vector tie-break.
    if (!have_best || acc > best.best_accuracy) {
      have_best = true;
      best.best_weights = w;
      best.best_accuracy = acc;
      best.best_correct = correct;
      best.best_decisions = decisions;
      best.no_decisions = decisions == 0;
    }

    int pos = kNumStrategies - 1;
    while (pos >= 0 && ++digit[static_cast<std::size_t>(pos)] == base) {
      digit[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  best.evaluated = evaluated;
  return best;
}

}  // namespace xsig
