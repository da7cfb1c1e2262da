// xsig: technical-indicator vote signals, Shapley explanations and backtests.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 stage failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xsig/errors.hpp"
#include "xsig/io.hpp"
#include "xsig/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitStage = 4;

using namespace xsig;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string input;
  std::string out = ".";
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_input) {
  auto* in = cmd->add_option("--input", args.input, "OHLCV CSV (date,open,high,low,close,volume)")
                 ->check(CLI::ExistingFile);
  if (needs_input) in->required();
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_option("--config", args.config, "JSON config (thresholds, weights, backtest, explain)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Seed for synthesis and k-means initialization");
}

RunConfig base_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(io::read_file(args.config));
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError(std::string("config: ") + e.what());
    }
    cfg = apply_config_json(doc, cfg);
  }
  if (args.seed) cfg.seed = *args.seed;
  cfg.input = args.input;
  cfg.out_dir = args.out;
  return cfg;
}

void write_out(const fs::path& dir, const std::string& name, const std::string& content) {
  io::write_file(dir / name, content);
  std::cerr << "wrote " << (dir / name).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xsig: weighted-vote technical signals with Shapley explanations"};
  app.require_subcommand(1);

  // synth
  CommonArgs synth_args;
  SyntheticParams synth;
  std::string synth_start = "2014-01-01";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic OHLCV series");
  add_common(synth_cmd, synth_args, false);
  synth_cmd->add_option("--days", synth.n_days, "Number of trading days")->capture_default_str();
  synth_cmd->add_option("--start-price", synth.start_price, "Initial close")->capture_default_str();
  synth_cmd->add_option("--drift", synth.drift, "Drift per day")->capture_default_str();
  synth_cmd->add_option("--vol", synth.vol, "Volatility per day")->capture_default_str();
  synth_cmd->add_option("--start-date", synth_start, "First calendar date")->capture_default_str();

  CommonArgs ind_args;
  auto* ind_cmd = app.add_subcommand("indicators", "Emit EMA/MACD/RSI frame as CSV");
  add_common(ind_cmd, ind_args, true);

  CommonArgs sig_args;
  auto* sig_cmd = app.add_subcommand("signals", "Emit the five-strategy signal matrix as CSV");
  add_common(sig_cmd, sig_args, true);

  // search
  CommonArgs search_args;
  int search_horizon = 5;
  std::string search_weights;
  std::optional<double> search_holdout;
  auto* search_cmd = app.add_subcommand("search", "Grid-search vote weights on the holdout tail");
  add_common(search_cmd, search_args, true);
  search_cmd->add_option("--horizon", search_horizon, "Evaluation horizon in days")
      ->check(CLI::IsMember({1, 5}))
      ->capture_default_str();
  search_cmd->add_option("--weights", search_weights, "Weight range, e.g. 1..5 or 1,2,3");
  search_cmd->add_option("--holdout", search_holdout, "Holdout fraction (tail)");

  // explain
  CommonArgs explain_args;
  int explain_horizon = 5;
  std::string explain_instance;
  bool explain_all = false;
  std::string explain_method;
  std::optional<Eigen::Index> explain_k;
  std::string explain_vote_weights;
  auto* explain_cmd = app.add_subcommand("explain", "Shapley attributions of the fused signal");
  add_common(explain_cmd, explain_args, true);
  explain_cmd->add_option("--horizon", explain_horizon, "Horizon whose weights are explained")
      ->check(CLI::IsMember({1, 5}))
      ->capture_default_str();
  auto* inst_opt = explain_cmd->add_option("--instance", explain_instance, "Explain one date (YYYY-MM-DD)");
  explain_cmd->add_flag("--all", explain_all, "Explain every non-warmup day")->excludes(inst_opt);
  explain_cmd->add_option("--method", explain_method, "exact or kernel")
      ->check(CLI::IsMember({"exact", "kernel"}));
  explain_cmd->add_option("--k", explain_k, "Background clusters (clamped to distinct rows)");
  explain_cmd->add_option("--vote-weights", explain_vote_weights,
                          "Fixed weights a,b,c,d,e instead of a grid search");

  // backtest
  CommonArgs bt_args;
  int bt_horizon = 5;
  std::string bt_policy;
  std::optional<double> bt_capital, bt_profit, bt_fees;
  std::optional<int> bt_hold, bt_entry, bt_max_hold;
  std::string bt_vote_weights;
  auto* bt_cmd = app.add_subcommand("backtest", "Simulate a portfolio driven by the fused signal");
  add_common(bt_cmd, bt_args, true);
  bt_cmd->add_option("--policy", bt_policy, "conservative or aggressive")
      ->check(CLI::IsMember({"conservative", "aggressive"}));
  bt_cmd->add_option("--capital", bt_capital, "Initial capital");
  bt_cmd->add_option("--hold-days", bt_hold, "Conservative holding period");
  bt_cmd->add_option("--profit", bt_profit, "Aggressive profit target fraction");
  bt_cmd->add_option("--fees-bps", bt_fees, "Fee per trade side in basis points");
  bt_cmd->add_option("--entry-level", bt_entry, "Minimum signal level to buy (1..3)");
  bt_cmd->add_option("--max-hold-days", bt_max_hold, "Aggressive time stop");
  bt_cmd->add_option("--horizon", bt_horizon, "Target horizon driving entries")
      ->check(CLI::IsMember({1, 5}))
      ->capture_default_str();
  bt_cmd->add_option("--vote-weights", bt_vote_weights, "Fixed weights a,b,c,d,e instead of a grid search");

  CommonArgs pipe_args;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage and write report.json");
  add_common(pipe_cmd, pipe_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      RunConfig cfg = base_config(synth_args);
      synth.seed = cfg.seed;
      const auto start = Date::parse(synth_start);
      if (!start) throw ArgumentError("--start-date must be YYYY-MM-DD");
      synth.start_date = *start;
      write_out(cfg.out_dir, "ohlcv.csv", serialize_ohlcv(generate_synthetic(synth)));
    } else if (ind_cmd->parsed()) {
      RunConfig cfg = base_config(ind_args);
      const auto data = prepare(cfg);
      write_out(cfg.out_dir, "indicators.csv", serialize_indicator_frame(data.frame));
    } else if (sig_cmd->parsed()) {
      RunConfig cfg = base_config(sig_args);
      const auto data = prepare(cfg);
      write_out(cfg.out_dir, "signals.csv", serialize_strategy_matrix(data.matrix));
    } else if (search_cmd->parsed()) {
      RunConfig cfg = base_config(search_args);
      if (!search_weights.empty()) cfg.weight_range = parse_weight_range(search_weights);
      if (search_holdout) cfg.holdout = *search_holdout;
      cfg.fixed_weights.reset();
      const auto data = prepare(cfg);
      const auto gs = resolve_weights(data, cfg, search_horizon);
      const std::string doc = grid_result_json(gs, data.matrix, cfg.weight_range).dump(2) + "\n";
      write_out(cfg.out_dir, "search_h" + std::to_string(search_horizon) + ".json", doc);
      std::cout << doc;
    } else if (explain_cmd->parsed()) {
      RunConfig cfg = base_config(explain_args);
      if (!explain_method.empty()) {
        cfg.explain.method = explain_method == "exact" ? ShapMethod::Exact : ShapMethod::Kernel;
      }
      if (explain_k) cfg.explain.k = *explain_k;
      if (!explain_vote_weights.empty()) cfg.fixed_weights = parse_weight_vector(explain_vote_weights);
      const auto data = prepare(cfg);
      const auto gs = resolve_weights(data, cfg, explain_horizon);

      std::vector<Eigen::Index> rows;
      if (!explain_instance.empty()) {
        const auto date = Date::parse(explain_instance);
        if (!date) throw ArgumentError("--instance must be YYYY-MM-DD");
        const auto it = std::find(data.matrix.dates.begin(), data.matrix.dates.end(), *date);
        if (it == data.matrix.dates.end()) {
          throw DataError("instance " + explain_instance + " is not a non-warmup trading day");
        }
        rows.push_back(it - data.matrix.dates.begin());
      } else if (explain_all) {
        for (Eigen::Index r = 0; r < data.matrix.rows(); ++r) rows.push_back(r);
      } else {
        for (Eigen::Index r = gs.holdout.begin; r < gs.holdout.end; ++r) rows.push_back(r);
      }
      const auto bg = build_background(data.matrix, cfg.explain, cfg.seed);
      const auto ex = explain_rows(data.matrix, gs.best_weights, bg, std::move(rows), cfg.explain.method);
      write_out(cfg.out_dir, "force_plots.json", force_plots_json(data.matrix, ex).dump(2) + "\n");
      write_out(cfg.out_dir, "shap_summary.json", summary_json(ex.summary, kStrategyNames).dump(2) + "\n");
    } else if (bt_cmd->parsed()) {
      RunConfig cfg = base_config(bt_args);
      auto& bt = cfg.backtest;
      if (!bt_policy.empty()) bt.policy = *parse_sell_policy(bt_policy);
      if (bt_capital) bt.initial_capital = *bt_capital;
      if (bt_hold) bt.hold_days = *bt_hold;
      if (bt_profit) bt.profit_threshold = *bt_profit;
      if (bt_fees) bt.fee_bps = *bt_fees;
      if (bt_entry) bt.entry_level = *bt_entry;
      if (bt_max_hold) bt.max_hold_days = *bt_max_hold;
      bt.validate();
      if (!bt_vote_weights.empty()) cfg.fixed_weights = parse_weight_vector(bt_vote_weights);
      const auto data = prepare(cfg);
      const auto gs = resolve_weights(data, cfg, bt_horizon);
      const auto z = make_target(data.matrix, gs.best_weights, bt_horizon);
      const auto res = run_backtest(data.series, z, bt);
      write_out(cfg.out_dir, "trades.csv", serialize_trades(res));
      write_out(cfg.out_dir, "equity.csv", serialize_equity(res));
      write_out(cfg.out_dir, "summary.json", summary_to_json(res.summary, bt).dump(2) + "\n");
    } else if (pipe_cmd->parsed()) {
      RunConfig cfg = base_config(pipe_args);
      const auto res = run_pipeline(cfg);
      std::cerr << "wrote " << res.artifacts.size() << " artifacts and report.json to "
                << cfg.out_dir.string() << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_data_error() ? kExitData : kExitStage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return EXIT_SUCCESS;
}
