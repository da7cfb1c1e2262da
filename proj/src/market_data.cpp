#include "xsig/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "xsig/errors.hpp"
#include "xsig/io.hpp"

namespace xsig {

namespace {

constexpr std::string_view kHeader = "date,open,high,low,close,volume";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

std::string line_prefix(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

void check_bar(const OhlcvBar& b, const std::string& where) {
  if (!(b.close > 0.0)) throw DataError(where + "non-positive close on " + b.date.iso());
  if (!(b.volume >= 0.0)) throw DataError(where + "negative volume on " + b.date.iso());
  const double lo = std::min(b.open, b.close);
  const double hi = std::max(b.open, b.close);
  if (!(b.low <= lo && hi <= b.high)) {
    throw DataError(where + "OHLC ordering violated on " + b.date.iso());
  }
}

// Uniform in (0, 1] from the top 53 bits; mt19937_64 output is fully specified.
double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller; avoids libstdc++-specific normal_distribution internals.
double standard_normal(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool is_weekend(const Date& d) {
  // 1970-01-01 was a Thursday.
  const long dow = ((d.days_since_epoch() % 7) + 7 + 3) % 7;  // 0 = Monday
  return dow >= 5;
}

}  // namespace

OhlcvBar OhlcvSeries::bar(Eigen::Index i) const {
  return OhlcvBar{dates[static_cast<std::size_t>(i)], open[i], high[i], low[i], close[i], volume[i],
                  delta_close[i]};
}

void OhlcvSeries::resize(Eigen::Index n) {
  dates.resize(static_cast<std::size_t>(n));
  open.resize(n);
  high.resize(n);
  low.resize(n);
  close.resize(n);
  volume.resize(n);
  delta_close.resize(n);
}

OhlcvSeries OhlcvSeries::from_bars(const std::vector<OhlcvBar>& bars) {
  OhlcvSeries s;
  s.resize(static_cast<Eigen::Index>(bars.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto& b = bars[static_cast<std::size_t>(i)];
    s.dates[static_cast<std::size_t>(i)] = b.date;
    s.open[i] = b.open;
    s.high[i] = b.high;
    s.low[i] = b.low;
    s.close[i] = b.close;
    s.volume[i] = b.volume;
    s.delta_close[i] = b.delta_close;
  }
  recompute_delta(s);
  return s;
}

void recompute_delta(OhlcvSeries& s) {
  s.delta_close.resize(s.size());
  if (s.empty()) return;
  s.delta_close[0] = 0.0;
  for (Eigen::Index d = 1; d < s.size(); ++d) s.delta_close[d] = s.close[d] - s.close[d - 1];
}

bool has_gaps(const OhlcvSeries& s) {
  return s.open.hasNaN() || s.high.hasNaN() || s.low.hasNaN() || s.close.hasNaN() ||
         s.volume.hasNaN();
}

void validate_series(const OhlcvSeries& s) {
  if (s.empty()) throw DataError("series is empty");
  if (has_gaps(s)) throw DataError("series has unfilled gaps");
  for (Eigen::Index d = 0; d < s.size(); ++d) {
    if (d > 0 && !(s.dates[static_cast<std::size_t>(d - 1)] < s.dates[static_cast<std::size_t>(d)])) {
      throw DataError("dates not strictly ascending at " + s.dates[static_cast<std::size_t>(d)].iso());
    }
    check_bar(s.bar(d), "");
  }
}

OhlcvSeries parse_ohlcv(std::string_view text, ParseOptions options) {
  std::vector<std::pair<OhlcvBar, std::size_t>> rows;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != kHeader) {
        throw DataError(line_prefix(line_no) + "expected header '" + std::string(kHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = io::split_fields(line);
    if (fields.size() != 6) {
      throw DataError(line_prefix(line_no) + "expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    const auto date = Date::parse(fields[0]);
    if (!date) throw DataError(line_prefix(line_no) + "bad date '" + std::string(fields[0]) + "'");

    OhlcvBar bar;
    bar.date = *date;
    double* targets[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume};
    bool complete = true;
    for (std::size_t f = 0; f < 5; ++f) {
      const auto token = fields[f + 1];
      if (is_missing_token(token)) {
        if (!options.allow_missing) {
          throw DataError(line_prefix(line_no) + "missing value in column " + std::to_string(f + 2));
        }
        *targets[f] = kNaN;
        complete = false;
        continue;
      }
      const auto value = io::parse_double(token);
      if (!value || !std::isfinite(*value)) {
        throw DataError(line_prefix(line_no) + "bad number '" + std::string(token) + "'");
      }
      *targets[f] = *value;
    }
    if (!std::isnan(bar.close) && !(bar.close > 0.0)) {
      throw DataError(line_prefix(line_no) + "non-positive close on " + bar.date.iso());
    }
    if (complete) check_bar(bar, line_prefix(line_no));
    rows.emplace_back(bar, line_no);
  }
  if (!saw_header) throw DataError("empty document: missing header");
  if (rows.empty()) throw DataError("no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first.date < b.first.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].first.date == rows[i - 1].first.date) {
      throw DataError(line_prefix(rows[i].second) + "duplicate date " + rows[i].first.date.iso());
    }
  }
  std::vector<OhlcvBar> bars;
  bars.reserve(rows.size());
  for (auto& r : rows) bars.push_back(r.first);
  return OhlcvSeries::from_bars(bars);
}

std::string serialize_ohlcv(const OhlcvSeries& s) {
  std::string out(kHeader);
  out += '\n';
  for (Eigen::Index d = 0; d < s.size(); ++d) {
    out += s.dates[static_cast<std::size_t>(d)].iso();
    for (double v : {s.open[d], s.high[d], s.low[d], s.close[d], s.volume[d]}) {
      out += ',';
      if (!std::isnan(v)) out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

OhlcvSeries forward_fill(const OhlcvSeries& series) {
  if (series.empty()) throw DataError("forward_fill: empty series");
  OhlcvSeries out = series;
  for (Eigen::VectorXd* col : {&out.open, &out.high, &out.low, &out.close, &out.volume}) {
    auto& c = *col;
    if (std::isnan(c[0])) {
      throw DataError("forward_fill: first bar (" + out.dates.front().iso() +
                      ") has a missing value; nothing to fill from");
    }
    for (Eigen::Index d = 1; d < c.size(); ++d) {
      if (std::isnan(c[d])) c[d] = c[d - 1];
    }
  }
  recompute_delta(out);
  return out;
}

OhlcvSeries generate_synthetic(const SyntheticParams& p) {
  if (p.n_days < 1) throw ArgumentError("generate_synthetic: n_days must be >= 1");
  if (!(p.start_price > 0.0)) throw ArgumentError("generate_synthetic: start_price must be > 0");
  if (!(p.vol >= 0.0)) throw ArgumentError("generate_synthetic: vol must be >= 0");

  std::mt19937_64 rng(p.seed);
  OhlcvSeries s;
  s.resize(p.n_days);

  long day = p.start_date.days_since_epoch();
  auto next_business_day = [&]() {
    while (is_weekend(Date::from_days_since_epoch(day))) ++day;
    return Date::from_days_since_epoch(day++);
  };

  const double log_drift = p.drift - 0.5 * p.vol * p.vol;
  double prev_close = p.start_price;
  for (Eigen::Index d = 0; d < p.n_days; ++d) {
    s.dates[static_cast<std::size_t>(d)] = next_business_day();
    const double shock = standard_normal(rng);
    const double wick_up = std::abs(standard_normal(rng));
    const double wick_dn = std::abs(standard_normal(rng));
    const double vol_shock = standard_normal(rng);

    const double open = prev_close;
    const double close = d == 0 ? p.start_price : prev_close * std::exp(log_drift + p.vol * shock);
    const double top = std::max(open, close);
    const double bottom = std::min(open, close);
    s.open[d] = open;
    s.close[d] = close;
    s.high[d] = top * (1.0 + 0.5 * p.vol * wick_up);
    s.low[d] = bottom * std::max(0.0, 1.0 - 0.5 * p.vol * wick_dn);
    s.volume[d] = std::round(1.0e6 * std::exp(0.25 * vol_shock));
    prev_close = close;
  }
  recompute_delta(s);
  return s;
}

}  // namespace xsig
