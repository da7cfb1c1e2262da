#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "xsig/date.hpp"
#include "xsig/indicators.hpp"

namespace xsig {

/// Seven-level coding: +3 strong buy ... 0 hold ... -3 strong sell.
using SignalLevel = int;
inline constexpr SignalLevel kMaxLevel = 3;

constexpr bool is_valid_level(int level) { return level >= -kMaxLevel && level <= kMaxLevel; }

inline constexpr int kNumStrategies = 5;

/// Column order for every per-strategy quantity (weights, SHAP, reports).
inline constexpr std::array<std::string_view, kNumStrategies> kStrategyNames = {
    "s_ema55", "s_ema100", "s_ema200", "s_macd", "s_rsi"};

using LevelSeries = Eigen::Matrix<SignalLevel, Eigen::Dynamic, 1>;
using SignalRow = Eigen::Matrix<SignalLevel, 1, kNumStrategies>;
using LevelMatrix = Eigen::Matrix<SignalLevel, Eigen::Dynamic, kNumStrategies, Eigen::RowMajor>;

enum class EmaPolarity { TrendFollowing, MeanReversion };

struct ThresholdConfig {
  std::array<double, 3> ema_bands = {0.01, 0.03, 0.05};
  std::array<double, 3> macd_bands = {0.0005, 0.0015, 0.003};
  /// Three buy cuts (ascending, <= 30) then three sell cuts (ascending, >= 70).
  std::array<double, 6> rsi_cuts = {10.0, 20.0, 30.0, 70.0, 80.0, 90.0};
  EmaPolarity ema_polarity = EmaPolarity::TrendFollowing;

  /// Throws ArgumentError describing the first broken invariant.
  void validate() const;
};

/// Level of a signed relative distance against three ascending bands.
SignalLevel band_level(double relative, const std::array<double, 3>& bands);

LevelSeries ema_signal(const Eigen::Ref<const Eigen::VectorXd>& close,
                       const Eigen::Ref<const Eigen::VectorXd>& ema_x,
                       const std::array<double, 3>& bands,
                       EmaPolarity polarity = EmaPolarity::TrendFollowing);

/// Histogram (macd - signal) normalized by close, banded like ema_signal.
LevelSeries macd_signal(const Eigen::Ref<const Eigen::VectorXd>& macd_line,
                        const Eigen::Ref<const Eigen::VectorXd>& signal_line,
                        const Eigen::Ref<const Eigen::VectorXd>& close,
                        const std::array<double, 3>& bands);

/// Oversold is a buy, overbought is a sell.
LevelSeries rsi_signal(const Eigen::Ref<const Eigen::VectorXd>& rsi,
                       const std::array<double, 6>& cuts);

/// Per-day strategy levels over the non-warmup rows of a frame.
/// Row r corresponds to series index `offset + r`.
struct StrategyMatrix {
  LevelMatrix levels;
  std::vector<Date> dates;
  Eigen::Index offset = 0;

  Eigen::Index rows() const { return levels.rows(); }
  SignalRow row(Eigen::Index r) const { return levels.row(r); }
};

StrategyMatrix build_strategy_matrix(const IndicatorFrame& frame, const Eigen::VectorXd& close,
                                     const ThresholdConfig& cfg = {});

/// CSV with header `date,s_ema55,s_ema100,s_ema200,s_macd,s_rsi`.
std::string serialize_strategy_matrix(const StrategyMatrix& matrix);

}  // namespace xsig
