#include "xsig/backtester.hpp"

#include <algorithm>
#include <limits>

#include "xsig/errors.hpp"
#include "xsig/io.hpp"

namespace xsig {

std::string_view to_string(SellPolicy policy) {
  return policy == SellPolicy::Conservative ? "conservative" : "aggressive";
}

std::optional<SellPolicy> parse_sell_policy(std::string_view text) {
  if (text == "conservative") return SellPolicy::Conservative;
  if (text == "aggressive") return SellPolicy::Aggressive;
  return std::nullopt;
}

std::string_view to_string(ExitReason reason) {
  switch (reason) {
    case ExitReason::HorizonElapsed: return "horizon_elapsed";
    case ExitReason::ProfitTarget: return "profit_target";
    case ExitReason::MaxHold: return "max_hold";
    case ExitReason::EndOfData: return "end_of_data";
  }
  return "unknown";
}

void BacktestConfig::validate() const {
  if (!(initial_capital > 0.0)) throw ArgumentError("backtest: initial capital must be > 0");
  if (entry_level < 1 || entry_level > 3) throw ArgumentError("backtest: entry level must be 1..3");
  if (!(profit_threshold > 0.0)) throw ArgumentError("backtest: profit threshold must be > 0");
  if (hold_days < 1) throw ArgumentError("backtest: hold days must be >= 1");
  if (max_hold_days && *max_hold_days < 1) throw ArgumentError("backtest: max hold days must be >= 1");
  if (!(fee_bps >= 0.0 && fee_bps < 10000.0)) throw ArgumentError("backtest: fee_bps must be in [0, 10000)");
}

BacktestResult run_backtest(const OhlcvSeries& series, const TargetSeries& z,
                            const BacktestConfig& cfg) {
  cfg.validate();
  if (series.empty()) throw ArgumentError("run_backtest: empty series");
  if (z.size() == 0 || z.offset < 0 || z.offset + z.size() > series.size()) {
    throw ArgumentError("run_backtest: target series not aligned with price series");
  }
  if (!z.dates.empty() && (static_cast<Eigen::Index>(z.dates.size()) != z.size() ||
                           z.dates.front() != series.dates[static_cast<std::size_t>(z.offset)])) {
    throw ArgumentError("run_backtest: target dates do not match price series");
  }

  const double fee = cfg.fee_bps / 10000.0;
  const Eigen::Index n = z.size();

  BacktestResult res;
  res.initial_capital = cfg.initial_capital;
  res.equity.resize(n);
  res.dates.assign(series.dates.begin() + z.offset, series.dates.begin() + z.offset + n);

  double cash = cfg.initial_capital;
  double units = 0.0;
  double cost = 0.0;
  Eigen::Index entry_d = -1;
  TradeRecord open;

  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index d = z.offset + r;
    const double price = series.close[d];

    if (entry_d >= 0) {
      std::optional<ExitReason> reason;
      if (cfg.policy == SellPolicy::Conservative) {
        if (d - entry_d >= cfg.hold_days) reason = ExitReason::HorizonElapsed;
      } else if (price >= open.entry_price * (1.0 + cfg.profit_threshold)) {
        reason = ExitReason::ProfitTarget;
      } else if (cfg.max_hold_days && d - entry_d >= *cfg.max_hold_days) {
        reason = ExitReason::MaxHold;
      }
      if (!reason && r == n - 1) reason = ExitReason::EndOfData;
      if (reason) {
        const double proceeds = units * price * (1.0 - fee);
        open.exit_date = series.dates[static_cast<std::size_t>(d)];
        open.exit_price = price;
        open.pnl = proceeds - cost;
        open.exit_reason = *reason;
        res.trades.push_back(open);
        cash = proceeds;
        units = 0.0;
        entry_d = -1;
      }
    }

    // No entry on the final bar: it could never be exited after entry.
    if (entry_d < 0 && r < n - 1 && z.z[r] >= cfg.entry_level) {
      cost = cash;
      units = cash * (1.0 - fee) / price;
      cash = 0.0;
      entry_d = d;
      open = TradeRecord{};
      open.entry_date = series.dates[static_cast<std::size_t>(d)];
      open.entry_price = price;
      open.units = units;
    }

    res.equity[r] = cash + units * price;
  }
  res.summary = summarize_result(res);
  return res;
}

double max_drawdown(const Eigen::Ref<const Eigen::VectorXd>& equity) {
  double peak = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index d = 0; d < equity.size(); ++d) {
    peak = std::max(peak, equity[d]);
    if (peak > 0.0) worst = std::max(worst, 1.0 - equity[d] / peak);
  }
  return worst;
}

BacktestSummary summarize_result(const BacktestResult& result) {
  BacktestSummary s;
  s.final_value = result.equity.size() > 0 ? result.equity[result.equity.size() - 1]
                                           : result.initial_capital;
  s.total_return = s.final_value / result.initial_capital - 1.0;
  s.trade_count = result.trades.size();
  if (!result.trades.empty()) {
    const auto wins = std::count_if(result.trades.begin(), result.trades.end(),
                                    [](const TradeRecord& t) { return t.pnl > 0.0; });
    s.win_rate = static_cast<double>(wins) / static_cast<double>(result.trades.size());
  }
  s.max_drawdown = max_drawdown(result.equity);
  return s;
}

std::string serialize_trades(const BacktestResult& result) {
  std::string out = "entry_date,exit_date,entry_price,exit_price,units,pnl,exit_reason\n";
  for (const auto& t : result.trades) {
    out += t.entry_date.iso() + ',' + t.exit_date.iso() + ',' + io::format_double(t.entry_price) +
           ',' + io::format_double(t.exit_price) + ',' + io::format_double(t.units) + ',' +
           io::format_double(t.pnl) + ',' + std::string(to_string(t.exit_reason)) + '\n';
  }
  return out;
}

std::string serialize_equity(const BacktestResult& result) {
  std::string out = "date,value\n";
  for (Eigen::Index r = 0; r < result.equity.size(); ++r) {
    out += result.dates[static_cast<std::size_t>(r)].iso() + ',' + io::format_double(result.equity[r]) + '\n';
  }
  return out;
}

nlohmann::ordered_json summary_to_json(const BacktestSummary& s, const BacktestConfig& cfg) {
  nlohmann::ordered_json j;
  j["policy"] = std::string(to_string(cfg.policy));
  j["initial_capital"] = cfg.initial_capital;
  j["final_value"] = s.final_value;
  j["total_return"] = s.total_return;
  j["trade_count"] = s.trade_count;
  j["win_rate"] = s.win_rate ? nlohmann::ordered_json(*s.win_rate) : nlohmann::ordered_json(nullptr);
  j["max_drawdown"] = s.max_drawdown;
  return j;
}

}  // namespace xsig
