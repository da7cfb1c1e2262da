#include <cmath>
#include <random>

#include "doctest.h"
#include "xsig/vote_ensemble.hpp"

using namespace xsig;

namespace {

SignalRow row(int a, int b, int c, int d, int e) { return (SignalRow() << a, b, c, d, e).finished(); }

OhlcvSeries series_from_closes(const std::vector<double>& closes) {
  std::vector<OhlcvBar> bars;
  for (std::size_t i = 0; i < closes.size(); ++i) {
    OhlcvBar b;
    b.date = Date::from_days_since_epoch(17000 + static_cast<long>(i));
    b.open = b.high = b.low = b.close = closes[i];
    b.volume = 1;
    bars.push_back(b);
  }
  return OhlcvSeries::from_bars(bars);
}

StrategyMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index offset,
                             const OhlcvSeries& s) {
  std::uniform_int_distribution<int> lvl(-3, 3);
  StrategyMatrix m;
  m.offset = offset;
  m.levels.resize(rows, kNumStrategies);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int j = 0; j < kNumStrategies; ++j) m.levels(r, j) = lvl(rng);
    m.dates.push_back(s.dates[static_cast<std::size_t>(offset + r)]);
  }
  return m;
}

}  // namespace

TEST_CASE("weighted_vote examples") {
  CHECK(weighted_vote(row(3, 3, 3, 3, 3), WeightVector{{4, 1, 5, 2, 3}}) == 3);
  CHECK(weighted_vote(row(3, -3, 0, 0, 0), WeightVector{}) == 0);
  // (2*2 + 1*1 + 2*(-1) + 1*0 + 2*3) / 8 = 9/8 -> 1
  CHECK(weighted_vote(row(2, 1, -1, 0, 3), WeightVector{{2, 1, 2, 1, 2}}) == 1);
  CHECK(weighted_mean(row(2, 1, -1, 0, 3), WeightVector{{2, 1, 2, 1, 2}}) == 9.0 / 8.0);
  // halves round away from zero
  CHECK(weighted_vote(row(1, 0, 0, 0, 0), WeightVector{}) == 0);  // 1/5
  CHECK(weighted_vote(row(3, 0, 0, 0, 0), WeightVector{{1, 1, 1, 1, 2}}) == 1);              // 0.5
  CHECK(weighted_vote(row(-3, 0, 0, 0, 0), WeightVector{{1, 1, 1, 1, 2}}) == -1);            // -0.5
  CHECK(weighted_vote(row(3, 3, 3, 0, 1), WeightVector{{1, 1, 1, 1, 2}}) == 2);              // 11/6
}

TEST_CASE("weighted_vote properties over random draws") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> lvl(-3, 3);
  std::uniform_int_distribution<int> wt(1, 5);
  for (int trial = 0; trial < 20000; ++trial) {
    SignalRow s;
    WeightVector w;
    for (int i = 0; i < 5; ++i) {
      s[i] = lvl(rng);
      w.w[i] = wt(rng);
    }
    const int v = weighted_vote(s, w);
    long num = 0;
    for (int i = 0; i < 5; ++i) num += long(w.w[i]) * s[i];

    CHECK(is_valid_level(v));
    CHECK(std::abs(v) <= s.cwiseAbs().maxCoeff());
    if (v != 0) CHECK((v > 0) == (num > 0));
    WeightVector w3 = w;
    for (auto& x : w3.w) x *= 3;
    CHECK(weighted_vote(s, w3) == v);
    // independent float route: round-half-away of the weighted mean
    CHECK(v == static_cast<int>(std::round(double(num) / w.sum())));
    // negating every signal negates the vote
    CHECK(weighted_vote(SignalRow(-s), w) == -v);
  }
}

TEST_CASE("make_target") {
  std::mt19937_64 rng(3);
  const auto s = series_from_closes(std::vector<double>(120, 10.0));
  const auto m = random_matrix(rng, 100, 10, s);
  const WeightVector w{{2, 1, 2, 1, 2}};
  const auto t = make_target(m, w, 5);
  CHECK(t.horizon == 5);
  CHECK(t.offset == 10);
  REQUIRE(t.size() == 100);
  for (Eigen::Index r = 0; r < 100; ++r) CHECK(t.z[r] == weighted_vote(m.row(r), w));

  StrategyMatrix zero;
  zero.levels = LevelMatrix::Zero(7, 5);
  zero.dates.assign(7, Date{});
  CHECK(make_target(zero, w, 1).z.cwiseAbs().maxCoeff() == 0);
  CHECK_THROWS_AS(make_target(zero, w, 3), ArgumentError);
  CHECK_THROWS_AS(make_target(zero, WeightVector{{0, 1, 1, 1, 1}}, 1), ArgumentError);
}

TEST_CASE("evaluate_accuracy") {
  std::vector<double> up(30), down(30);
  for (int i = 0; i < 30; ++i) {
    up[i] = 100.0 + i;
    down[i] = 200.0 - i;
  }
  TargetSeries t;
  t.horizon = 1;
  t.z = LevelSeries::Constant(29, 1);
  CHECK(evaluate_accuracy(t, series_from_closes(up), {0, 29}).accuracy == 1.0);
  CHECK(evaluate_accuracy(t, series_from_closes(down), {0, 29}).accuracy == 0.0);
  CHECK_THROWS_AS(evaluate_accuracy(t, series_from_closes(up), {0, 30}), ArgumentError);

  t.z.setZero();
  const auto none = evaluate_accuracy(t, series_from_closes(up), {0, 29});
  CHECK(none.no_decisions);
  CHECK(none.accuracy == 0.0);

  SUBCASE("mixed 20-day fixture against a hand count") {
    const std::vector<double> closes = {10, 11, 10.5, 12, 12, 11, 13, 14, 13.5, 13, 15,
                                        16, 15,  14,  14.5, 17, 16, 18, 19, 18.5, 20, 21, 20, 22, 23};
    const auto s = series_from_closes(closes);
    TargetSeries z;
    z.horizon = 5;
    z.z.resize(20);
    z.z << 1, -2, 0, 3, -1, 2, 0, -3, 1, 1, -1, 0, 2, 3, -2, 1, 0, -1, 2, 1;
    // Oracle: walk every day and count sign agreements by hand.
    int correct = 0, total = 0;
    for (int d = 0; d < 20; ++d) {
      if (z.z[d] == 0) continue;
      ++total;
      const double change = closes[d + 5] - closes[d];
      if ((z.z[d] > 0 && change > 0) || (z.z[d] < 0 && change < 0)) ++correct;
    }
    const auto acc = evaluate_accuracy(z, s, {0, 20});
    CHECK(acc.decisions == total);
    CHECK(acc.correct == correct);
    CHECK(acc.accuracy == doctest::Approx(double(correct) / total));
    CHECK(total == 16);
  }
}

TEST_CASE("holdout_window is the evaluable chronological tail") {
  const auto s = series_from_closes(std::vector<double>(400, 5.0));
  StrategyMatrix m;
  m.offset = 100;
  m.levels = LevelMatrix::Zero(300, 5);
  const auto w1 = holdout_window(m, s, 1, 0.2);
  CHECK(w1.begin == 240);
  CHECK(w1.end == 299);
  const auto w5 = holdout_window(m, s, 5, 0.2);
  CHECK(w5.begin == 240);
  CHECK(w5.end == 295);
  StrategyMatrix tiny;
  tiny.offset = 390;
  tiny.levels = LevelMatrix::Zero(10, 5);
  CHECK_THROWS_AS(holdout_window(tiny, s, 5, 0.2), ArgumentError);  // 2-row holdout < horizon
}

namespace {

struct OracleResult {
  std::array<int, 5> w{};
  double acc = -1.0;
  std::size_t count = 0;
};

// Independent exhaustive enumeration: nested loops, float vote, direct scoring.
OracleResult brute_force(const StrategyMatrix& m, const OhlcvSeries& s, int horizon,
                         const std::vector<int>& range, Eigen::Index begin, Eigen::Index end) {
  OracleResult best;
  for (int a : range)
    for (int b : range)
      for (int c : range)
        for (int d : range)
          for (int e : range) {
            const int w[5] = {a, b, c, d, e};
            int correct = 0, total = 0;
            for (Eigen::Index r = begin; r < end; ++r) {
              double num = 0, den = 0;
              for (int j = 0; j < 5; ++j) {
                num += w[j] * m.levels(r, j);
                den += w[j];
              }
              const double vote = std::round(num / den);
              if (vote == 0) continue;
              ++total;
              const double change = s.close[m.offset + r + horizon] - s.close[m.offset + r];
              if ((vote > 0) == (change > 0) && change != 0) ++correct;
            }
            const double acc = total ? double(correct) / total : 0.0;
            ++best.count;
            if (acc > best.acc) {
              best.acc = acc;
              best.w = {a, b, c, d, e};
            }
          }
  return best;
}

}  // namespace

TEST_CASE("grid_search") {
  std::mt19937_64 rng(77);
  const auto base = generate_synthetic({.seed = 12, .n_days = 310, .start_price = 1000.0});
  const auto m = random_matrix(rng, 300, 10, base);

  SUBCASE("singleton grid") {
    const auto r = grid_search(m, base, 5, {1});
    CHECK(r.evaluated == 1);
    CHECK(r.best_weights == WeightVector{});
  }
  SUBCASE("32-combination grid equals brute force") {
    for (int h : {1, 5}) {
      const auto r = grid_search(m, base, h, {2, 1});
      const auto w = holdout_window(m, base, h, 0.2);
      const auto o = brute_force(m, base, h, {1, 2}, w.begin, w.end);
      CHECK(r.evaluated == 32);
      CHECK(o.count == 32);
      CHECK(r.best_weights.w == o.w);
      CHECK(r.best_accuracy == o.acc);
    }
  }
  SUBCASE("best accuracy dominates sampled re-scores") {
    const auto r = grid_search(m, base, 5, {1, 2, 3, 4, 5});
    CHECK(r.evaluated == 3125);
    std::uniform_int_distribution<int> wt(1, 5);
    for (int i = 0; i < 200; ++i) {
      WeightVector w;
      for (auto& x : w.w) x = wt(rng);
      const auto acc = evaluate_accuracy(make_target(m, w, 5), base, r.holdout);
      CHECK(acc.accuracy <= r.best_accuracy);
    }
    const auto again = grid_search(m, base, 5, {5, 4, 3, 2, 1});
    CHECK(again.best_weights == r.best_weights);
    CHECK(again.best_accuracy == r.best_accuracy);
  }
  SUBCASE("ties resolve to the lexicographically smallest vector") {
    StrategyMatrix flat = m;
    flat.levels.setZero();
    const auto r = grid_search(flat, base, 1, {1, 2, 3});
    CHECK(r.no_decisions);
    CHECK(r.best_weights == WeightVector{});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(grid_search(m, base, 5, {}), ArgumentError);
    CHECK_THROWS_AS(grid_search(m, base, 2, {1}), ArgumentError);
    CHECK_THROWS_AS(grid_search(m, base, 5, {1}, 0.0), ArgumentError);
  }
}
