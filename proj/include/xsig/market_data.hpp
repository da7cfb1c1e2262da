#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xsig/date.hpp"

namespace xsig {

struct OhlcvBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
  double delta_close = 0.0;
};

/// Daily bars stored column-wise. Missing observations are NaN and only
/// appear between `parse_ohlcv(..., {.allow_missing = true})` and
/// `forward_fill`.
struct OhlcvSeries {
  std::vector<Date> dates;
  Eigen::VectorXd open;
  Eigen::VectorXd high;
  Eigen::VectorXd low;
  Eigen::VectorXd close;
  Eigen::VectorXd volume;
  Eigen::VectorXd delta_close;

  Eigen::Index size() const { return static_cast<Eigen::Index>(dates.size()); }
  bool empty() const { return dates.empty(); }
  OhlcvBar bar(Eigen::Index i) const;

  static OhlcvSeries from_bars(const std::vector<OhlcvBar>& bars);
  void resize(Eigen::Index n);
};

struct ParseOptions {
  /// Accept empty / NA / NaN numeric fields as gaps to be forward-filled.
  bool allow_missing = false;
};

/// Parses `date,open,high,low,close,volume` CSV. Rows may arrive in any
/// order; the result is sorted ascending. Throws DataError with the
/// 1-based line number on malformed rows.
OhlcvSeries parse_ohlcv(std::string_view text, ParseOptions options = {});

/// Inverse of parse_ohlcv for gap-free series (shortest round-trip numbers).
std::string serialize_ohlcv(const OhlcvSeries& series);

/// Replaces every NaN field with the latest observed value of that field
/// and recomputes delta_close. Throws DataError if the first bar has gaps.
OhlcvSeries forward_fill(const OhlcvSeries& series);

bool has_gaps(const OhlcvSeries& series);

/// delta_close[0] = 0, delta_close[d] = close[d] - close[d-1].
void recompute_delta(OhlcvSeries& series);

/// Throws DataError on the first violated bar invariant or date ordering.
void validate_series(const OhlcvSeries& series);

struct SyntheticParams {
  std::uint64_t seed = 1;
  Eigen::Index n_days = 2500;
  double start_price = 30000.0;
  double drift = 0.0003;
  double vol = 0.01;
  Date start_date{2014, 1, 1};
};

/// Geometric random walk on business days. open[d] = close[d-1]; wicks
/// scale with `vol` so a zero-vol walk is perfectly flat.
OhlcvSeries generate_synthetic(const SyntheticParams& params);

}  // namespace xsig
