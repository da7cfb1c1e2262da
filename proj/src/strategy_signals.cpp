#include "xsig/strategy_signals.hpp"

#include <cmath>

#include "xsig/errors.hpp"

namespace xsig {

namespace {

void require_same_length(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw ArgumentError(std::string(what) + ": misaligned lengths " + std::to_string(a) + " vs " +
                        std::to_string(b));
  }
}

bool strictly_ascending(const double* v, std::size_t n) {
  for (std::size_t i = 1; i < n; ++i) {
    if (!(v[i - 1] < v[i])) return false;
  }
  return true;
}

}  // namespace

void ThresholdConfig::validate() const {
  if (!(ema_bands[0] > 0.0) || !strictly_ascending(ema_bands.data(), 3)) {
    throw ArgumentError("thresholds: ema_bands must be positive and strictly ascending");
  }
  if (!(macd_bands[0] > 0.0) || !strictly_ascending(macd_bands.data(), 3)) {
    throw ArgumentError("thresholds: macd_bands must be positive and strictly ascending");
  }
  if (!(rsi_cuts[0] >= 0.0) || !(rsi_cuts[5] <= 100.0) || !strictly_ascending(rsi_cuts.data(), 6)) {
    throw ArgumentError("thresholds: rsi_cuts must be strictly ascending within [0, 100]");
  }
  if (rsi_cuts[2] > 30.0 || rsi_cuts[3] < 70.0) {
    throw ArgumentError("thresholds: rsi buy cuts must be <= 30 and sell cuts >= 70");
  }
}

SignalLevel band_level(double relative, const std::array<double, 3>& bands) {
  const double mag = std::abs(relative);
  SignalLevel level = 0;
  if (mag >= bands[2]) {
    level = 3;
  } else if (mag >= bands[1]) {
    level = 2;
  } else if (mag >= bands[0]) {
    level = 1;
  }
  return relative < 0.0 ? -level : level;
}

LevelSeries ema_signal(const Eigen::Ref<const Eigen::VectorXd>& close,
                       const Eigen::Ref<const Eigen::VectorXd>& ema_x,
                       const std::array<double, 3>& bands, EmaPolarity polarity) {
  require_same_length(close.size(), ema_x.size(), "ema_signal");
  const int sign = polarity == EmaPolarity::TrendFollowing ? 1 : -1;
  LevelSeries out(close.size());
  for (Eigen::Index d = 0; d < close.size(); ++d) {
    out[d] = sign * band_level((close[d] - ema_x[d]) / ema_x[d], bands);
  }
  return out;
}

LevelSeries macd_signal(const Eigen::Ref<const Eigen::VectorXd>& macd_line,
                        const Eigen::Ref<const Eigen::VectorXd>& signal_line,
                        const Eigen::Ref<const Eigen::VectorXd>& close,
                        const std::array<double, 3>& bands) {
  require_same_length(macd_line.size(), signal_line.size(), "macd_signal");
  require_same_length(macd_line.size(), close.size(), "macd_signal");
  LevelSeries out(close.size());
  for (Eigen::Index d = 0; d < close.size(); ++d) {
    out[d] = band_level((macd_line[d] - signal_line[d]) / close[d], bands);
  }
  return out;
}

LevelSeries rsi_signal(const Eigen::Ref<const Eigen::VectorXd>& rsi,
                       const std::array<double, 6>& cuts) {
  LevelSeries out(rsi.size());
  for (Eigen::Index d = 0; d < rsi.size(); ++d) {
    const double v = rsi[d];
    if (!(v >= 0.0 && v <= 100.0)) {
      throw ArgumentError("rsi_signal: value out of [0, 100] at row " + std::to_string(d));
    }
    SignalLevel level = 0;
    if (v <= cuts[0]) {
      level = 3;
    } else if (v <= cuts[1]) {
      level = 2;
    } else if (v <= cuts[2]) {
      level = 1;
    } else if (v >= cuts[5]) {
      level = -3;
    } else if (v >= cuts[4]) {
      level = -2;
    } else if (v >= cuts[3]) {
      level = -1;
    }
    out[d] = level;
  }
  return out;
}

StrategyMatrix build_strategy_matrix(const IndicatorFrame& frame, const Eigen::VectorXd& close,
                                     const ThresholdConfig& cfg) {
  cfg.validate();
  require_same_length(frame.size(), close.size(), "build_strategy_matrix");
  const Eigen::Index start = frame.warmup_len;
  const Eigen::Index n = frame.size() - start;
  if (n <= 0) throw ArgumentError("build_strategy_matrix: frame has no rows past warmup");

  const auto c = close.segment(start, n);
  StrategyMatrix m;
  m.offset = start;
  m.dates.assign(frame.dates.begin() + start, frame.dates.end());
  m.levels.resize(n, kNumStrategies);
  m.levels.col(0) = ema_signal(c, frame.ema55.segment(start, n), cfg.ema_bands, cfg.ema_polarity);
  m.levels.col(1) = ema_signal(c, frame.ema100.segment(start, n), cfg.ema_bands, cfg.ema_polarity);
  m.levels.col(2) = ema_signal(c, frame.ema200.segment(start, n), cfg.ema_bands, cfg.ema_polarity);
  m.levels.col(3) = macd_signal(frame.macd_line.segment(start, n),
                                frame.signal_line.segment(start, n), c, cfg.macd_bands);
  m.levels.col(4) = rsi_signal(frame.rsi.segment(start, n), cfg.rsi_cuts);
  return m;
}

std::string serialize_strategy_matrix(const StrategyMatrix& m) {
  std::string out = "date";
  for (auto name : kStrategyNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += m.dates[static_cast<std::size_t>(r)].iso();
    for (int j = 0; j < kNumStrategies; ++j) {
      out += ',';
      out += std::to_string(m.levels(r, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace xsig
