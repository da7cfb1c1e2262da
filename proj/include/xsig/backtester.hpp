#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xsig/market_data.hpp"
#include "xsig/vote_ensemble.hpp"

namespace xsig {

enum class SellPolicy {
  Conservative,  // sell after a fixed holding period
  Aggressive,    // sell on the first close reaching the profit target
};

std::string_view to_string(SellPolicy policy);
std::optional<SellPolicy> parse_sell_policy(std::string_view text);

struct BacktestConfig {
  double initial_capital = 10000.0;
  int entry_level = 3;
  SellPolicy policy = SellPolicy::Conservative;
  int hold_days = 5;
  double profit_threshold = 0.02;
  std::optional<int> max_hold_days;
  double fee_bps = 0.0;

  void validate() const;
};

enum class ExitReason { HorizonElapsed, ProfitTarget, MaxHold, EndOfData };

std::string_view to_string(ExitReason reason);

struct TradeRecord {
  Date entry_date;
  Date exit_date;
  double entry_price = 0.0;
  double exit_price = 0.0;
  double units = 0.0;
  double pnl = 0.0;
  ExitReason exit_reason = ExitReason::EndOfData;
};

struct BacktestSummary {
  double final_value = 0.0;
  double total_return = 0.0;
  std::size_t trade_count = 0;
  /// Undefined (nullopt) without trades.
  std::optional<double> win_rate;
  double max_drawdown = 0.0;
};

struct BacktestResult {
  std::vector<TradeRecord> trades;
  std::vector<Date> dates;
  /// Cash plus position marked at each close, after that bar's fills.
  Eigen::VectorXd equity;
  double initial_capital = 0.0;
  BacktestSummary summary;
};

/// Single-position long-only simulation over the rows of `z`. Fills happen
/// at the signal bar's close; an exit is processed before a same-bar entry.
BacktestResult run_backtest(const OhlcvSeries& series, const TargetSeries& z,
                            const BacktestConfig& cfg);

BacktestSummary summarize_result(const BacktestResult& result);

/// max over d of 1 - equity[d] / max(equity[0..d]).
double max_drawdown(const Eigen::Ref<const Eigen::VectorXd>& equity);

/// `entry_date,exit_date,entry_price,exit_price,units,pnl,exit_reason`
std::string serialize_trades(const BacktestResult& result);
/// `date,value`
std::string serialize_equity(const BacktestResult& result);
nlohmann::ordered_json summary_to_json(const BacktestSummary& summary, const BacktestConfig& cfg);

}  // namespace xsig
