#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xsig/backtester.hpp"
#include "xsig/indicators.hpp"
#include "xsig/market_data.hpp"
#include "xsig/shap_explain.hpp"
#include "xsig/strategy_signals.hpp"
#include "xsig/vote_ensemble.hpp"

namespace xsig {

enum class ShapMethod { Exact, Kernel };

struct ExplainConfig {
  Eigen::Index k = 50;
  int max_iter = 100;
  ShapMethod method = ShapMethod::Kernel;
};

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  IndicatorConfig indicators;
  ThresholdConfig thresholds;
  std::vector<int> weight_range{1, 2, 3, 4, 5};
  double holdout = 0.2;
  std::vector<int> horizons{1, 5};
  /// Skip the grid search and vote with these weights.
  std::optional<WeightVector> fixed_weights;
  BacktestConfig backtest;
  int backtest_horizon = 5;
  ExplainConfig explain;
  std::uint64_t seed = 42;
};

/// "1..5" or "1,2,4".
std::vector<int> parse_weight_range(std::string_view text);
/// "2,1,2,1,2" in strategy column order.
WeightVector parse_weight_vector(std::string_view text);

/// Overlays a config document (keys thresholds, weights, backtest, explain,
/// seed) onto `base`. Unknown keys are rejected with ArgumentError.
RunConfig apply_config_json(const nlohmann::json& doc, RunConfig base = {});
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Collects output files and their content hashes for the manifest.
class ArtifactWriter {
 public:
  struct Entry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::size_t bytes = 0;
  };

  explicit ArtifactWriter(std::filesystem::path out_dir) : out_dir_(std::move(out_dir)) {}

  void write(const std::string& relative_path, std::string_view content);
  const std::vector<Entry>& entries() const { return entries_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  std::filesystem::path out_dir_;
  std::vector<Entry> entries_;
};

/// Read, parse (gaps allowed), forward-fill and validate. Errors are
/// StageError("ingest") flagged as data errors.
OhlcvSeries ingest(const std::filesystem::path& path);

nlohmann::ordered_json grid_result_json(const GridSearchResult& result, const StrategyMatrix& matrix,
                                        const std::vector<int>& weight_range);

BackgroundSet build_background(const StrategyMatrix& matrix, const ExplainConfig& cfg,
                               std::uint64_t seed);

struct Explanation {
  std::vector<Eigen::Index> rows;
  std::vector<ShapAttribution> attributions;
  ImportanceSummary summary;
};

Explanation explain_rows(const StrategyMatrix& matrix, const WeightVector& w, const BackgroundSet& bg,
                         std::vector<Eigen::Index> rows, ShapMethod method);

nlohmann::ordered_json force_plots_json(const StrategyMatrix& matrix, const Explanation& ex);
/// Flat per-instance rows: date, base_value, fx, decision, one phi column per strategy.
std::string attribution_rows_csv(const StrategyMatrix& matrix, const Explanation& ex);
std::string importance_csv(const ImportanceSummary& summary);

/// Shared front half of every analysis subcommand.
struct PreparedData {
  OhlcvSeries series;
  IndicatorFrame frame;
  StrategyMatrix matrix;
};

PreparedData prepare(const RunConfig& cfg);

/// Grid search for `horizon`, or the configured fixed weights.
GridSearchResult resolve_weights(const PreparedData& data, const RunConfig& cfg, int horizon);

struct PipelineResult {
  std::vector<ArtifactWriter::Entry> artifacts;
  std::vector<GridSearchResult> searches;
  std::vector<BacktestSummary> backtests;
};

/// ingest -> indicators -> signals -> search (each horizon) -> targets ->
/// explanations (holdout rows) -> backtests (both policies) -> figure data,
/// then `report.json` listing every artifact with its SHA-256.
PipelineResult run_pipeline(const RunConfig& cfg);

}  // namespace xsig
