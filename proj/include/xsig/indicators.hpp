#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>

#include "xsig/errors.hpp"
#include "xsig/market_data.hpp"

namespace xsig {

template <typename Scalar>
using Series = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Exponential moving average with alpha = 2 / (span + 1), seeded with
/// out[0] = close[0].
template <typename Derived>
Series<typename Derived::Scalar> ema(const Eigen::MatrixBase<Derived>& close, int span) {
  using Scalar = typename Derived::Scalar;
  if (span < 1) throw ArgumentError("ema: span must be >= 1");
  if (close.size() == 0) throw ArgumentError("ema: empty series");
  const Scalar alpha = Scalar(2) / Scalar(span + 1);
  Series<Scalar> out(close.size());
  out[0] = close[0];
  for (Eigen::Index d = 1; d < close.size(); ++d) {
    // incremental form keeps a constant input exactly constant
    out[d] = out[d - 1] + alpha * (close[d] - out[d - 1]);
  }
  return out;
}

template <typename Scalar>
struct MacdLines {
  Series<Scalar> macd_line;
  Series<Scalar> signal_line;
};

/// macd_line = ema(fast) - ema(slow); signal_line = ema(macd_line, signal_span).
template <typename Derived>
MacdLines<typename Derived::Scalar> macd(const Eigen::MatrixBase<Derived>& close, int fast = 12,
                                         int slow = 26, int signal_span = 9) {
  if (fast >= slow) throw ArgumentError("macd: fast span must be shorter than slow span");
  if (close.size() < slow) throw ArgumentError("macd: series shorter than slow span");
  MacdLines<typename Derived::Scalar> out;
  out.macd_line = ema(close, fast) - ema(close, slow);
  out.signal_line = ema(out.macd_line, signal_span);
  return out;
}

/// Relative strength index from simple (unsmoothed) means of the trailing
/// `period` close-to-close gains and losses.
///
/// Rows d < period have no complete window and carry the neutral value 50.
/// A window with no losses gives 100; a window with neither gains nor
/// losses gives 50.
template <typename Derived>
Series<typename Derived::Scalar> rsi(const Eigen::MatrixBase<Derived>& close, int period = 14) {
  using Scalar = typename Derived::Scalar;
  if (period < 1) throw ArgumentError("rsi: period must be >= 1");
  if (close.size() < period + 1) throw ArgumentError("rsi: series shorter than period + 1");
  Series<Scalar> out = Series<Scalar>::Constant(close.size(), Scalar(50));
  for (Eigen::Index d = period; d < close.size(); ++d) {
    Scalar gain_sum(0);
    Scalar loss_sum(0);
    for (Eigen::Index r = d - period + 1; r <= d; ++r) {
      const Scalar change = close[r] - close[r - 1];
      if (change > Scalar(0)) gain_sum += change;
      if (change < Scalar(0)) loss_sum -= change;
    }
    const Scalar avg_gain = gain_sum / Scalar(period);
    const Scalar avg_loss = loss_sum / Scalar(period);
    if (avg_loss == Scalar(0)) {
      out[d] = avg_gain == Scalar(0) ? Scalar(50) : Scalar(100);
    } else {
      const Scalar rs = avg_gain / avg_loss;
      out[d] = Scalar(100) - Scalar(100) / (Scalar(1) + rs);
    }
  }
  return out;
}

struct IndicatorConfig {
  int ema_short = 55;
  int ema_mid = 100;
  int ema_long = 200;
  int macd_fast = 12;
  int macd_slow = 26;
  int macd_signal = 9;
  int rsi_period = 14;
  Eigen::Index warmup_len = 200;
};

/// Indicator columns aligned 1:1 with an OhlcvSeries. Rows
/// [0, warmup_len) are seed-dominated and must not feed signals.
struct IndicatorFrame {
  std::vector<Date> dates;
  Eigen::VectorXd close;
  Eigen::VectorXd ema55;
  Eigen::VectorXd ema100;
  Eigen::VectorXd ema200;
  Eigen::VectorXd macd_line;
  Eigen::VectorXd signal_line;
  Eigen::VectorXd rsi;
  Eigen::Index warmup_len = 200;

  Eigen::Index size() const { return static_cast<Eigen::Index>(dates.size()); }
  bool is_warmup(Eigen::Index row) const { return row < warmup_len; }
};

IndicatorFrame indicator_frame(const OhlcvSeries& series, const IndicatorConfig& cfg = {});

/// CSV with header `date,close,ema55,ema100,ema200,macd_line,signal_line,rsi,warmup`.
std::string serialize_indicator_frame(const IndicatorFrame& frame);

}  // namespace xsig
