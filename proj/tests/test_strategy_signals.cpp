#include <random>

#include "doctest.h"
#include "xsig/strategy_signals.hpp"

using namespace xsig;

namespace {

const std::array<double, 3> kEmaBands = {0.01, 0.03, 0.05};
const std::array<double, 3> kMacdBands = {0.0005, 0.0015, 0.003};
const std::array<double, 6> kRsiCuts = {10, 20, 30, 70, 80, 90};

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

IndicatorFrame hand_frame(const Eigen::VectorXd& close, const Eigen::VectorXd& ema_all,
                          const Eigen::VectorXd& macd_line, const Eigen::VectorXd& signal_line,
                          const Eigen::VectorXd& rsi) {
  IndicatorFrame f;
  for (Eigen::Index d = 0; d < close.size(); ++d) f.dates.push_back(Date::from_days_since_epoch(19000 + d));
  f.close = close;
  f.ema55 = f.ema100 = f.ema200 = ema_all;
  f.macd_line = macd_line;
  f.signal_line = signal_line;
  f.rsi = rsi;
  f.warmup_len = 0;
  return f;
}

}  // namespace

TEST_CASE("ema_signal band arithmetic") {
  const auto s = ema_signal(vec({100, 103.5, 94, 100.5, 101}), vec({100, 100, 100, 100, 100}), kEmaBands);
  CHECK(s[0] == 0);    // on the EMA
  CHECK(s[1] == 2);    // +3.5 %
  CHECK(s[2] == -3);   // -6 %
  CHECK(s[3] == 0);    // +0.5 %
  CHECK(s[4] == 1);    // band edge is inclusive
  CHECK_THROWS_AS(ema_signal(vec({1, 2}), vec({1}), kEmaBands), ArgumentError);

  const auto rev = ema_signal(vec({103.5}), vec({100}), kEmaBands, EmaPolarity::MeanReversion);
  CHECK(rev[0] == -2);
}

TEST_CASE("macd_signal band arithmetic") {
  // h / close = 0.002 and -0.004 at close 1000
  const auto s = macd_signal(vec({5, 2, -1}), vec({5, 0, 3}), vec({1000, 1000, 1000}), kMacdBands);
  CHECK(s[0] == 0);
  CHECK(s[1] == 2);
  CHECK(s[2] == -3);
  CHECK_THROWS_AS(macd_signal(vec({1}), vec({1, 2}), vec({1}), kMacdBands), ArgumentError);
}

TEST_CASE("rsi_signal default cuts") {
  const auto s = rsi_signal(vec({50, 75, 15, 5, 25, 85, 95, 30, 70, 10, 90}), kRsiCuts);
  const int expected[] = {0, -1, 2, 3, 1, -2, -3, 1, -1, 3, -3};
  for (int i = 0; i < 11; ++i) CHECK(s[i] == expected[i]);
  CHECK_THROWS_AS(rsi_signal(vec({101}), kRsiCuts), ArgumentError);
  CHECK_THROWS_AS(rsi_signal(vec({-0.5}), kRsiCuts), ArgumentError);
}

TEST_CASE("rsi_signal is antisymmetric under reflection") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Eigen::VectorXd r(2000);
  for (auto& v : r) v = u(rng);
  r[0] = 30.0;
  r[1] = 10.0;
  r[2] = 50.0;
  const auto a = rsi_signal(r, kRsiCuts);
  const auto b = rsi_signal(Eigen::VectorXd(100.0 - r.array()), kRsiCuts);
  CHECK((a + b).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("signals are invariant under uniform price scaling") {
  const auto s = generate_synthetic({.seed = 8, .n_days = 600});
  auto scaled = s;
  scaled.open *= 4.0;
  scaled.high *= 4.0;
  scaled.low *= 4.0;
  scaled.close *= 4.0;
  const auto m1 = build_strategy_matrix(indicator_frame(s), s.close);
  const auto m2 = build_strategy_matrix(indicator_frame(scaled), scaled.close);
  // Multiplying by 4 is exact in binary floating point, so levels agree exactly.
  CHECK(m1.levels == m2.levels);
}

TEST_CASE("ThresholdConfig validation") {
  ThresholdConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.ema_bands = {0.03, 0.01, 0.05};
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.rsi_cuts = {10, 20, 35, 70, 80, 90};
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.macd_bands = {0.0, 0.001, 0.002};
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("build_strategy_matrix") {
  SUBCASE("hand-evaluated row") {
    // close 6 % above every EMA, histogram/close = 0.01, RSI 50
    const auto frame = hand_frame(vec({106}), vec({100}), vec({1.06}), vec({0.0}), vec({50}));
    const auto m = build_strategy_matrix(frame, frame.close);
    REQUIRE(m.rows() == 1);
    const SignalRow expected = (SignalRow() << 3, 3, 3, 3, 0).finished();
    CHECK(m.row(0) == expected);
  }
  SUBCASE("constant prices give an all-hold matrix") {
    const auto s = generate_synthetic({.n_days = 400, .drift = 0.0, .vol = 0.0});
    const auto m = build_strategy_matrix(indicator_frame(s), s.close);
    CHECK(m.rows() == 200);
    CHECK(m.offset == 200);
    CHECK(m.levels.cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("columns equal standalone operations") {
    const auto s = generate_synthetic({.seed = 2, .n_days = 1200});
    const auto f = indicator_frame(s);
    const ThresholdConfig cfg;
    const auto m = build_strategy_matrix(f, s.close, cfg);
    const Eigen::Index n = s.size() - 200;
    const auto c = s.close.tail(n);
    CHECK(m.rows() == n);
    CHECK(m.dates.front() == s.dates[200]);
    CHECK(m.levels.col(0) == ema_signal(c, f.ema55.tail(n), cfg.ema_bands));
    CHECK(m.levels.col(1) == ema_signal(c, f.ema100.tail(n), cfg.ema_bands));
    CHECK(m.levels.col(2) == ema_signal(c, f.ema200.tail(n), cfg.ema_bands));
    CHECK(m.levels.col(3) == macd_signal(f.macd_line.tail(n), f.signal_line.tail(n), c, cfg.macd_bands));
    CHECK(m.levels.col(4) == rsi_signal(f.rsi.tail(n), cfg.rsi_cuts));
    // every level is one of the seven codes
    CHECK(m.levels.maxCoeff() <= 3);
    CHECK(m.levels.minCoeff() >= -3);
  }
  SUBCASE("csv layout") {
    const auto f = hand_frame(vec({100, 106}), vec({100, 100}), vec({0, 0}), vec({0, 0}), vec({50, 50}));
    const auto csv = serialize_strategy_matrix(build_strategy_matrix(f, f.close));
    CHECK(csv == "date,s_ema55,s_ema100,s_ema200,s_macd,s_rsi\n"
                 "2022-01-08,0,0,0,0,0\n"
                 "2022-01-09,3,3,3,0,0\n");
  }
}
