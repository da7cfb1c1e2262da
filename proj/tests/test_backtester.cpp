#include <cmath>
#include <random>

#include "doctest.h"
#include "xsig/backtester.hpp"

using namespace xsig;

namespace {

OhlcvSeries series_from_closes(const std::vector<double>& closes) {
  std::vector<OhlcvBar> bars;
  for (std::size_t i = 0; i < closes.size(); ++i) {
    OhlcvBar b;
    b.date = Date::from_days_since_epoch(18500 + static_cast<long>(i));
    b.open = b.high = b.low = b.close = closes[i];
    b.volume = 1;
    bars.push_back(b);
  }
  return OhlcvSeries::from_bars(bars);
}

TargetSeries target_for(const OhlcvSeries& s, const std::vector<int>& z) {
  TargetSeries t;
  t.horizon = 5;
  t.offset = 0;
  t.dates = s.dates;
  t.z = Eigen::Map<const LevelSeries>(z.data(), static_cast<Eigen::Index>(z.size()));
  return t;
}

const std::vector<double> kCloses = {95,  98,  100, 101, 101.5, 101.9, 102.5, 110, 108, 107,
                                     106, 105, 104, 103, 102,   101,   100,   99,  98,  97,
                                     96,  95,  96,  97,  98,    99,    100,   101, 102, 103};

std::vector<int> fixture_signals() {
  std::vector<int> z(30, 0);
  z[2] = 3;   // entry
  z[4] = 3;   // ignored: already holding
  z[12] = 2;  // ignored: below the strong-signal entry level
  return z;
}

}  // namespace

TEST_CASE("all-hold target never trades") {
  const auto s = series_from_closes(kCloses);
  const auto res = run_backtest(s, target_for(s, std::vector<int>(30, 0)), {});
  CHECK(res.trades.empty());
  CHECK(res.summary.final_value == 10000.0);
  CHECK_FALSE(res.summary.win_rate.has_value());
  CHECK(res.summary.max_drawdown == 0.0);
  CHECK((res.equity.array() == 10000.0).all());
}

TEST_CASE("conservative policy matches hand accounting") {
  const auto s = series_from_closes(kCloses);
  const auto res = run_backtest(s, target_for(s, fixture_signals()), {});
  REQUIRE(res.trades.size() == 1);
  const auto& t = res.trades[0];
  CHECK(t.entry_date == s.dates[2]);
  CHECK(t.exit_date == s.dates[7]);
  CHECK(t.entry_price == 100.0);
  CHECK(t.exit_price == 110.0);
  CHECK(t.units == 100.0);
  CHECK(t.pnl == 1000.0);
  CHECK(t.exit_reason == ExitReason::HorizonElapsed);
  CHECK(res.summary.final_value == 11000.0);
  CHECK(res.summary.total_return == doctest::Approx(0.1));
  CHECK(*res.summary.win_rate == 1.0);
  CHECK(res.equity[0] == 10000.0);
  CHECK(res.equity[6] == 10250.0);
}

TEST_CASE("aggressive policy exits at the first qualifying close") {
  const auto s = series_from_closes(kCloses);
  BacktestConfig cfg;
  cfg.policy = SellPolicy::Aggressive;
  const auto res = run_backtest(s, target_for(s, fixture_signals()), cfg);
  REQUIRE(res.trades.size() == 1);

  Eigen::Index first = -1;
  for (Eigen::Index d = 3; d < s.size(); ++d) {
    if (s.close[d] >= 100.0 * 1.02) {
      first = d;
      break;
    }
  }
  REQUIRE(first == 6);
  CHECK(res.trades[0].exit_date == s.dates[first]);
  CHECK(res.trades[0].exit_reason == ExitReason::ProfitTarget);
  CHECK(res.summary.final_value == doctest::Approx(10250.0));
}

TEST_CASE("aggressive time stop and end of data") {
  std::vector<double> sagging(20);
  for (int i = 0; i < 20; ++i) sagging[i] = 100.0 - 0.5 * i;
  const auto s = series_from_closes(sagging);
  std::vector<int> z(20, 0);
  z[1] = 3;

  BacktestConfig cfg;
  cfg.policy = SellPolicy::Aggressive;
  auto res = run_backtest(s, target_for(s, z), cfg);
  REQUIRE(res.trades.size() == 1);
  CHECK(res.trades[0].exit_reason == ExitReason::EndOfData);
  CHECK(res.trades[0].exit_date == s.dates.back());

  cfg.max_hold_days = 4;
  res = run_backtest(s, target_for(s, z), cfg);
  REQUIRE(res.trades.size() == 1);
  CHECK(res.trades[0].exit_reason == ExitReason::MaxHold);
  CHECK(res.trades[0].exit_date == s.dates[5]);
  CHECK(res.summary.win_rate == 0.0);
}

TEST_CASE("no entry on the final bar; exit then same-bar re-entry") {
  const auto s = series_from_closes(std::vector<double>(12, 50.0));
  std::vector<int> z(12, 3);
  const auto res = run_backtest(s, target_for(s, z), {});
  // entries at 0, 5, 10; the last exits at end of data on bar 11
  REQUIRE(res.trades.size() == 3);
  CHECK(res.trades[1].entry_date == s.dates[5]);
  CHECK(res.trades[2].exit_reason == ExitReason::EndOfData);
  for (const auto& t : res.trades) CHECK(t.exit_date > t.entry_date);
}

TEST_CASE("random runs: conservation, fees, determinism") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> lvl(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = generate_synthetic({.seed = static_cast<std::uint64_t>(trial + 1), .n_days = 400, .start_price = 200.0});
    std::vector<int> z(400);
    for (auto& v : z) v = lvl(rng);
    const auto t = target_for(s, z);
    for (SellPolicy policy : {SellPolicy::Conservative, SellPolicy::Aggressive}) {
      BacktestConfig cfg;
      cfg.policy = policy;
      cfg.entry_level = 2;
      const auto res = run_backtest(s, t, cfg);

      // Value changes only with the position held across each bar.
      const auto& tr = res.trades;
      for (Eigen::Index d = 1; d < s.size(); ++d) {
        double units_held = 0.0;
        for (const auto& x : tr) {
          if (x.entry_date < s.dates[d] && s.dates[d] <= x.exit_date) units_held = x.units;
        }
        const double expected = res.equity[d - 1] + units_held * (s.close[d] - s.close[d - 1]);
        CHECK(std::abs(res.equity[d] - expected) <= 1e-9 * std::max(1.0, res.equity[d - 1]));
      }

      double pnl = 0.0;
      for (const auto& x : tr) {
        pnl += x.pnl;
        CHECK(std::abs(x.pnl - x.units * (x.exit_price - x.entry_price)) <= 1e-9 * x.units * x.entry_price);
      }
      CHECK(res.summary.final_value == doctest::Approx(10000.0 + pnl).epsilon(1e-12));

      double previous = res.summary.final_value;
      for (double fee : {1.0, 5.0, 25.0, 100.0}) {
        cfg.fee_bps = fee;
        const auto with_fee = run_backtest(s, t, cfg);
        if (with_fee.trades.size() == res.trades.size()) {
          CHECK(with_fee.summary.final_value <= previous);
          previous = with_fee.summary.final_value;
        }
        for (const auto& x : with_fee.trades) {
          const double fees = x.units * x.entry_price * (cfg.fee_bps / 10000.0) / (1 - cfg.fee_bps / 10000.0) +
                              x.units * x.exit_price * (cfg.fee_bps / 10000.0);
          CHECK(std::abs(x.pnl - (x.units * (x.exit_price - x.entry_price) - fees)) <= 1e-9 * x.units * x.entry_price);
        }
      }
      cfg.fee_bps = 0.0;
      CHECK(serialize_trades(run_backtest(s, t, cfg)) == serialize_trades(res));
    }
  }
}

TEST_CASE("summary statistics") {
  CHECK(max_drawdown(Eigen::Vector4d(100, 120, 90, 130)) == doctest::Approx(0.25));
  CHECK(max_drawdown(Eigen::Vector4d(1, 2, 3, 4)) == 0.0);
}

TEST_CASE("config validation and alignment") {
  const auto s = series_from_closes(kCloses);
  BacktestConfig cfg;
  cfg.initial_capital = 0.0;
  CHECK_THROWS_AS(run_backtest(s, target_for(s, fixture_signals()), cfg), ArgumentError);
  cfg = {};
  cfg.entry_level = 4;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.profit_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  auto t = target_for(s, fixture_signals());
  t.offset = 5;
  CHECK_THROWS_AS(run_backtest(s, t, {}), ArgumentError);
}

TEST_CASE("csv and json layout") {
  const auto s = series_from_closes(kCloses);
  const auto res = run_backtest(s, target_for(s, fixture_signals()), {});
  CHECK(serialize_trades(res) ==
        "entry_date,exit_date,entry_price,exit_price,units,pnl,exit_reason\n"
        "2020-08-28,2020-09-02,100,110,100,1000,horizon_elapsed\n");
  const auto eq = serialize_equity(res);
  CHECK(eq.rfind("date,value\n2020-08-26,10000\n", 0) == 0);
  const auto j = summary_to_json(res.summary, {});
  CHECK(j["final_value"] == 11000.0);
  CHECK(j["trade_count"] == 1);
  CHECK(j["policy"] == "conservative");
}
