#include "xsig/indicators.hpp"

#include <algorithm>

#include "xsig/io.hpp"

namespace xsig {

IndicatorFrame indicator_frame(const OhlcvSeries& series, const IndicatorConfig& cfg) {
  const int max_span = std::max({cfg.ema_short, cfg.ema_mid, cfg.ema_long});
  const Eigen::Index min_len = std::max<Eigen::Index>(max_span, cfg.warmup_len);
  if (series.size() <= min_len) {
    throw DataError("indicator_frame: need more than " + std::to_string(min_len) + " bars, got " +
                    std::to_string(series.size()));
  }
  IndicatorFrame f;
  f.dates = series.dates;
  f.close = series.close;
  f.ema55 = ema(series.close, cfg.ema_short);
  f.ema100 = ema(series.close, cfg.ema_mid);
  f.ema200 = ema(series.close, cfg.ema_long);
  auto lines = macd(series.close, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal);
  f.macd_line = std::move(lines.macd_line);
  f.signal_line = std::move(lines.signal_line);
  f.rsi = rsi(series.close, cfg.rsi_period);
  f.warmup_len = cfg.warmup_len;
  return f;
}

std::string serialize_indicator_frame(const IndicatorFrame& f) {
  std::string out = "date,close,ema55,ema100,ema200,macd_line,signal_line,rsi,warmup\n";
  for (Eigen::Index d = 0; d < f.size(); ++d) {
    out += f.dates[static_cast<std::size_t>(d)].iso();
    for (double v : {f.close[d], f.ema55[d], f.ema100[d], f.ema200[d], f.macd_line[d],
                     f.signal_line[d], f.rsi[d]}) {
      out += ',';
      out += io::format_double(v);
    }
    out += f.is_warmup(d) ? ",true\n" : ",false\n";
  }
  return out;
}

}  // namespace xsig
