#include "xsig/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "xsig/errors.hpp"
#include "xsig/io.hpp"

namespace xsig {

namespace {

using ojson = nlohmann::ordered_json;

template <typename F>
auto run_stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const DataError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ArgumentError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

void reject_unknown(const nlohmann::json& obj, const std::string& section,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ArgumentError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ArgumentError("config: unknown key '" + section + "." + key + "'");
    }
  }
}

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& v, const std::string& name) {
  if (!v.is_array() || v.size() != N) {
    throw ArgumentError("config: '" + name + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = v.at(i).get<double>();
  return out;
}

ojson weights_json(const WeightVector& w) {
  ojson j;
  for (int i = 0; i < kNumStrategies; ++i) j[std::string(kStrategyNames[i])] = w.w[i];
  return j;
}

WeightVector weights_from_json(const nlohmann::json& j) {
  WeightVector w;
  if (j.is_array()) {
    if (j.size() != kNumStrategies) throw ArgumentError("config: weights.fixed needs 5 entries");
    for (int i = 0; i < kNumStrategies; ++i) w.w[i] = j.at(i).get<int>();
  } else {
    reject_unknown(j, "weights.fixed", {"s_ema55", "s_ema100", "s_ema200", "s_macd", "s_rsi"});
    for (int i = 0; i < kNumStrategies; ++i) w.w[i] = j.at(std::string(kStrategyNames[i])).get<int>();
  }
  w.validate();
  return w;
}

std::string fixed_str(double v) { return io::format_double(v); }

}  // namespace

std::vector<int> parse_weight_range(std::string_view text) {
  std::vector<int> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const int lo = parse_int(text.substr(0, dots));
    const int hi = parse_int(text.substr(dots + 2));
    if (lo > hi) throw ArgumentError("weight range '" + std::string(text) + "' is empty");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  } else {
    for (auto tok : io::split_fields(text)) out.push_back(parse_int(tok));
  }
  if (out.empty()) throw ArgumentError("empty weight range");
  for (int v : out) {
    if (v < 1) throw ArgumentError("weights must be >= 1");
  }
  return out;
}

WeightVector parse_weight_vector(std::string_view text) {
  const auto toks = io::split_fields(text);
  if (toks.size() != kNumStrategies) throw ArgumentError("weight vector needs 5 comma-separated integers");
  WeightVector w;
  for (int i = 0; i < kNumStrategies; ++i) w.w[i] = parse_int(toks[static_cast<std::size_t>(i)]);
  w.validate();
  return w;
}

RunConfig apply_config_json(const nlohmann::json& doc, RunConfig cfg) {
  try {
    reject_unknown(doc, "<root>", {"thresholds", "weights", "backtest", "explain", "seed"});
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("thresholds")) {
      const auto& t = doc["thresholds"];
      reject_unknown(t, "thresholds", {"ema_bands", "macd_bands", "rsi_cuts", "ema_polarity"});
      if (t.contains("ema_bands")) cfg.thresholds.ema_bands = read_array<3>(t["ema_bands"], "ema_bands");
      if (t.contains("macd_bands")) cfg.thresholds.macd_bands = read_array<3>(t["macd_bands"], "macd_bands");
      if (t.contains("rsi_cuts")) cfg.thresholds.rsi_cuts = read_array<6>(t["rsi_cuts"], "rsi_cuts");
      if (t.contains("ema_polarity")) {
        const auto p = t["ema_polarity"].get<std::string>();
        if (p == "trend_following") {
          cfg.thresholds.ema_polarity = EmaPolarity::TrendFollowing;
        } else if (p == "mean_reversion") {
          cfg.thresholds.ema_polarity = EmaPolarity::MeanReversion;
        } else {
          throw ArgumentError("config: ema_polarity must be trend_following or mean_reversion");
        }
      }
      cfg.thresholds.validate();
    }
    if (doc.contains("weights")) {
      const auto& w = doc["weights"];
      reject_unknown(w, "weights", {"range", "holdout", "horizons", "fixed"});
      if (w.contains("range")) {
        cfg.weight_range = w["range"].is_string() ? parse_weight_range(w["range"].get<std::string>())
                                                  : w["range"].get<std::vector<int>>();
        if (cfg.weight_range.empty()) throw ArgumentError("config: weights.range is empty");
      }
      if (w.contains("holdout")) cfg.holdout = w["holdout"].get<double>();
      if (w.contains("horizons")) cfg.horizons = w["horizons"].get<std::vector<int>>();
      if (w.contains("fixed")) cfg.fixed_weights = weights_from_json(w["fixed"]);
    }
    if (doc.contains("backtest")) {
      const auto& b = doc["backtest"];
      reject_unknown(b, "backtest", {"initial_capital", "entry_level", "policy", "hold_days",
                                     "profit_threshold", "max_hold_days", "fee_bps", "horizon"});
      auto& bt = cfg.backtest;
      if (b.contains("initial_capital")) bt.initial_capital = b["initial_capital"].get<double>();
      if (b.contains("entry_level")) bt.entry_level = b["entry_level"].get<int>();
      if (b.contains("policy")) {
        const auto p = parse_sell_policy(b["policy"].get<std::string>());
        if (!p) throw ArgumentError("config: backtest.policy must be conservative or aggressive");
        bt.policy = *p;
      }
      if (b.contains("hold_days")) bt.hold_days = b["hold_days"].get<int>();
      if (b.contains("profit_threshold")) bt.profit_threshold = b["profit_threshold"].get<double>();
      if (b.contains("max_hold_days")) {
        if (b["max_hold_days"].is_null()) {
          bt.max_hold_days.reset();
        } else {
          bt.max_hold_days = b["max_hold_days"].get<int>();
        }
      }
      if (b.contains("fee_bps")) bt.fee_bps = b["fee_bps"].get<double>();
      if (b.contains("horizon")) cfg.backtest_horizon = b["horizon"].get<int>();
      bt.validate();
    }
    if (doc.contains("explain")) {
      const auto& e = doc["explain"];
      reject_unknown(e, "explain", {"k", "method", "max_iter"});
      if (e.contains("k")) cfg.explain.k = e["k"].get<Eigen::Index>();
      if (e.contains("max_iter")) cfg.explain.max_iter = e["max_iter"].get<int>();
      if (e.contains("method")) {
        const auto m = e["method"].get<std::string>();
        if (m == "exact") {
          cfg.explain.method = ShapMethod::Exact;
        } else if (m == "kernel") {
          cfg.explain.method = ShapMethod::Kernel;
        } else {
          throw ArgumentError("config: explain.method must be exact or kernel");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  for (int h : cfg.horizons) {
    if (h != 1 && h != 5) throw ArgumentError("config: horizons must be 1 or 5");
  }
  if (cfg.backtest_horizon != 1 && cfg.backtest_horizon != 5) {
    throw ArgumentError("config: backtest.horizon must be 1 or 5");
  }
  return cfg;
}

ojson config_to_json(const RunConfig& cfg) {
  ojson j;
  j["seed"] = cfg.seed;
  j["thresholds"] = {{"ema_bands", cfg.thresholds.ema_bands},
                     {"macd_bands", cfg.thresholds.macd_bands},
                     {"rsi_cuts", cfg.thresholds.rsi_cuts},
                     {"ema_polarity", cfg.thresholds.ema_polarity == EmaPolarity::TrendFollowing
                                          ? "trend_following"
                                          : "mean_reversion"}};
  ojson w;
  w["range"] = cfg.weight_range;
  w["holdout"] = cfg.holdout;
  w["horizons"] = cfg.horizons;
  if (cfg.fixed_weights) w["fixed"] = weights_json(*cfg.fixed_weights);
  j["weights"] = w;
  ojson b;
  b["initial_capital"] = cfg.backtest.initial_capital;
  b["entry_level"] = cfg.backtest.entry_level;
  b["hold_days"] = cfg.backtest.hold_days;
  b["profit_threshold"] = cfg.backtest.profit_threshold;
  b["max_hold_days"] = cfg.backtest.max_hold_days ? ojson(*cfg.backtest.max_hold_days) : ojson(nullptr);
  b["fee_bps"] = cfg.backtest.fee_bps;
  b["horizon"] = cfg.backtest_horizon;
  j["backtest"] = b;
  j["explain"] = {{"k", cfg.explain.k},
                  {"method", cfg.explain.method == ShapMethod::Exact ? "exact" : "kernel"},
                  {"max_iter", cfg.explain.max_iter}};
  return j;
}

void ArtifactWriter::write(const std::string& relative_path, std::string_view content) {
  io::write_file(out_dir_ / relative_path, content);
  entries_.push_back(Entry{relative_path, io::sha256_hex(content), content.size()});
}

OhlcvSeries ingest(const std::filesystem::path& path) {
  return run_stage("ingest", [&] {
    std::string text;
    try {
      text = io::read_file(path);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    auto series = forward_fill(parse_ohlcv(text, ParseOptions{.allow_missing = true}));
    validate_series(series);
    return series;
  });
}

ojson grid_result_json(const GridSearchResult& r, const StrategyMatrix& matrix,
                       const std::vector<int>& weight_range) {
  ojson j;
  j["horizon"] = r.horizon;
  j["best_weights"] = weights_json(r.best_weights);
  j["best_accuracy"] = r.best_accuracy;
  j["evaluated"] = r.evaluated;
  j["correct"] = r.best_correct;
  j["decisions"] = r.best_decisions;
  j["no_decisions"] = r.no_decisions;
  j["weight_range"] = weight_range;
  j["holdout"] = {{"rows", r.holdout.size()},
                  {"start_date", matrix.dates[static_cast<std::size_t>(r.holdout.begin)].iso()},
                  {"end_date", matrix.dates[static_cast<std::size_t>(r.holdout.end - 1)].iso()}};
  return j;
}

BackgroundSet build_background(const StrategyMatrix& matrix, const ExplainConfig& cfg,
                               std::uint64_t seed) {
  const Eigen::MatrixXd points = matrix.levels.cast<double>();
  const Eigen::Index k = std::min(cfg.k, count_distinct_rows(points));
  return kmeans(points, k, KMeansOptions{cfg.max_iter, seed, true}).background;
}

Explanation explain_rows(const StrategyMatrix& matrix, const WeightVector& w, const BackgroundSet& bg,
                         std::vector<Eigen::Index> rows, ShapMethod method) {
  const Model f = make_vote_model(w);
  Explanation ex;
  ex.rows = std::move(rows);
  ex.attributions.reserve(ex.rows.size());
  for (auto r : ex.rows) {
    const Eigen::VectorXd x = matrix.row(r).cast<double>().transpose();
    ex.attributions.push_back(method == ShapMethod::Exact ? exact_shapley(f, x, bg) : kernel_shap(f, x, bg));
  }
  ex.summary = summarize(ex.attributions);
  return ex;
}

ojson force_plots_json(const StrategyMatrix& matrix, const Explanation& ex) {
  ojson arr = ojson::array();
  for (std::size_t i = 0; i < ex.rows.size(); ++i) {
    const auto r = ex.rows[i];
    const Eigen::VectorXd x = matrix.row(r).cast<double>().transpose();
    arr.push_back(force_plot_data(ex.attributions[i], x, kStrategyNames,
                                  matrix.dates[static_cast<std::size_t>(r)]));
  }
  return arr;
}

std::string attribution_rows_csv(const StrategyMatrix& matrix, const Explanation& ex) {
  std::string out = "date,base_value,fx,decision";
  for (auto name : kStrategyNames) out += ",phi_" + std::string(name);
  out += '\n';
  for (std::size_t i = 0; i < ex.rows.size(); ++i) {
    const auto& a = ex.attributions[i];
    out += matrix.dates[static_cast<std::size_t>(ex.rows[i])].iso() + ',' + fixed_str(a.base_value) +
           ',' + fixed_str(a.fx) + ',' + std::to_string(quantize_level(a.fx));
    for (Eigen::Index j = 0; j < a.phi.size(); ++j) out += ',' + fixed_str(a.phi[j]);
    out += '\n';
  }
  return out;
}

std::string importance_csv(const ImportanceSummary& s) {
  std::string out = "strategy,mean_abs_phi,rank\n";
  for (std::size_t rank = 0; rank < s.ranking.size(); ++rank) {
    const int j = s.ranking[rank];
    out += std::string(kStrategyNames[static_cast<std::size_t>(j)]) + ',' +
           fixed_str(s.mean_abs_phi[j]) + ',' + std::to_string(rank + 1) + '\n';
  }
  return out;
}

PreparedData prepare(const RunConfig& cfg) {
  PreparedData d;
  d.series = ingest(cfg.input);
  d.frame = run_stage("indicators", [&] { return indicator_frame(d.series, cfg.indicators); });
  d.matrix = run_stage("signals", [&] {
    return build_strategy_matrix(d.frame, d.series.close, cfg.thresholds);
  });
  return d;
}

GridSearchResult resolve_weights(const PreparedData& data, const RunConfig& cfg, int horizon) {
  return run_stage("search", [&] {
    if (!cfg.fixed_weights) {
      return grid_search(data.matrix, data.series, horizon, cfg.weight_range, cfg.holdout);
    }
    GridSearchResult r;
    r.horizon = horizon;
    r.best_weights = *cfg.fixed_weights;
    r.holdout = holdout_window(data.matrix, data.series, horizon, cfg.holdout);
    const auto acc = evaluate_accuracy(make_target(data.matrix, r.best_weights, horizon), data.series,
                                       r.holdout);
    r.best_accuracy = acc.accuracy;
    r.best_correct = acc.correct;
    r.best_decisions = acc.decisions;
    r.no_decisions = acc.no_decisions;
    r.evaluated = 1;
    return r;
  });
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  const PreparedData data = prepare(cfg);
  const auto& series = data.series;
  const auto& matrix = data.matrix;

  ArtifactWriter out(cfg.out_dir);
  PipelineResult result;
  run_stage("write", [&] {
    out.write("indicators.csv", serialize_indicator_frame(data.frame));
    out.write("signals.csv", serialize_strategy_matrix(matrix));
    return 0;
  });

  std::vector<int> horizons = cfg.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  if (horizons.empty()) throw StageError("search", "no horizons configured", false);

  std::vector<TargetSeries> targets;
  for (int h : horizons) {
    auto gs = resolve_weights(data, cfg, h);
    out.write("search_h" + std::to_string(h) + ".json",
              grid_result_json(gs, matrix, cfg.weight_range).dump(2) + "\n");
    targets.push_back(make_target(matrix, gs.best_weights, h));
    result.searches.push_back(gs);
  }

  {
    std::string csv = "date";
    for (int h : horizons) csv += ",z_" + std::to_string(h) + "d";
    csv += '\n';
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      csv += matrix.dates[static_cast<std::size_t>(r)].iso();
      for (const auto& t : targets) csv += ',' + std::to_string(t.z[r]);
      csv += '\n';
    }
    out.write("targets.csv", csv);
  }

  run_stage("explain", [&] {
    const BackgroundSet bg = build_background(matrix, cfg.explain, cfg.seed);
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      const auto& gs = result.searches[i];
      std::vector<Eigen::Index> rows;
      for (Eigen::Index r = gs.holdout.begin; r < gs.holdout.end; ++r) rows.push_back(r);
      const auto ex = explain_rows(matrix, gs.best_weights, bg, std::move(rows), cfg.explain.method);
      const std::string tag = "h" + std::to_string(horizons[i]);
      out.write("explain_" + tag + "/force_plots.json", force_plots_json(matrix, ex).dump(2) + "\n");
      out.write("explain_" + tag + "/shap_summary.json",
                summary_json(ex.summary, kStrategyNames).dump(2) + "\n");
      out.write("figures/fig05_importance_" + tag + ".csv", importance_csv(ex.summary));
      out.write("figures/fig06_attributions_" + tag + ".csv", attribution_rows_csv(matrix, ex));
    }
    return 0;
  });

  const auto target_it = std::find(horizons.begin(), horizons.end(), cfg.backtest_horizon);
  if (target_it == horizons.end()) {
    throw StageError("backtest", "backtest horizon is not among the searched horizons", false);
  }
  const auto& z = targets[static_cast<std::size_t>(target_it - horizons.begin())];
  run_stage("backtest", [&] {
    for (SellPolicy policy : {SellPolicy::Conservative, SellPolicy::Aggressive}) {
      BacktestConfig bt = cfg.backtest;
      bt.policy = policy;
      const auto res = run_backtest(series, z, bt);
      const std::string dir = "backtest_" + std::string(to_string(policy)) + "/";
      const std::string equity = serialize_equity(res);
      out.write(dir + "trades.csv", serialize_trades(res));
      out.write(dir + "equity.csv", equity);
      out.write(dir + "summary.json", summary_to_json(res.summary, bt).dump(2) + "\n");
      out.write(policy == SellPolicy::Conservative ? "figures/fig10_equity_conservative.csv"
                                                   : "figures/fig11_equity_aggressive.csv",
                equity);
      result.backtests.push_back(res.summary);
    }
    return 0;
  });

  run_stage("figures", [&] {
    std::string close = "date,close\n";
    std::string overlay = "date,close,ema55,ema100,ema200,warmup\n";
    for (Eigen::Index d = 0; d < series.size(); ++d) {
      const auto date = series.dates[static_cast<std::size_t>(d)].iso();
      close += date + ',' + fixed_str(series.close[d]) + '\n';
      overlay += date + ',' + fixed_str(series.close[d]) + ',' + fixed_str(data.frame.ema55[d]) + ',' +
                 fixed_str(data.frame.ema100[d]) + ',' + fixed_str(data.frame.ema200[d]) +
                 (data.frame.is_warmup(d) ? ",true\n" : ",false\n");
    }
    out.write("figures/fig01_close.csv", close);
    out.write("figures/fig02_ema_overlay.csv", overlay);

    std::string markers = "date,close";
    for (auto name : kStrategyNames) markers += ',' + std::string(name);
    markers += '\n';
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      markers += matrix.dates[static_cast<std::size_t>(r)].iso() + ',' +
                 fixed_str(series.close[matrix.offset + r]);
      for (int j = 0; j < kNumStrategies; ++j) markers += ',' + std::to_string(matrix.levels(r, j));
      markers += '\n';
    }
    out.write("figures/fig03_signal_markers.csv", markers);
    return 0;
  });

  run_stage("report", [&] {
    ojson manifest;
    manifest["input_sha256"] = io::sha256_hex(io::read_file(cfg.input));
    manifest["config"] = config_to_json(cfg);
    manifest["artifacts"] = ojson::array();
    for (const auto& e : out.entries()) {
      manifest["artifacts"].push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    }
    io::write_file(cfg.out_dir / "report.json", manifest.dump(2) + "\n");
    return 0;
  });
  result.artifacts = out.entries();
  return result;
}

}  // namespace xsig
