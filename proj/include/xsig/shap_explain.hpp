#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xsig/date.hpp"
#include "xsig/vote_ensemble.hpp"

namespace xsig {

/// Scalar model over a feature vector. For the vote ensemble this is the
/// pre-quantization weighted mean.
using Model = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

Model make_vote_model(const WeightVector& w);

/// Weighted representative rows standing in for "feature absent".
struct BackgroundSet {
  Eigen::MatrixXd rows;     // one row per representative
  Eigen::VectorXd weights;  // positive, sums to 1

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index features() const { return rows.cols(); }
  void validate() const;

  static BackgroundSet uniform(const Eigen::MatrixXd& rows);
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d, before any rounding
  std::vector<Eigen::Index> assignment;
  /// Inertia after each assignment step, in iteration order.
  std::vector<double> inertia_history;
  int iterations = 0;
  bool converged = false;
  /// Non-empty clusters only; weights are cluster size / n.
  BackgroundSet background;
};

struct KMeansOptions {
  int max_iter = 100;
  std::uint64_t seed = 7;
  /// Round background centroids to the nearest valid SignalLevel.
  bool round_to_levels = true;
};

/// Lloyd's algorithm initialized from k distinct points drawn with a seeded
/// shuffle. Assignment ties go to the lowest cluster index; empty clusters
/// keep their previous centroid and are dropped from the background.
KMeansResult kmeans(const Eigen::MatrixXd& points, Eigen::Index k, const KMeansOptions& options = {});

Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points);

/// Coalitions are bitmasks over feature indices (bit i = feature i present).
using Coalition = std::uint32_t;

/// E_bg[f(x on `subset`, background elsewhere)], weighted by background mass.
double masked_value(const Model& f, const Eigen::VectorXd& x, Coalition subset,
                    const BackgroundSet& bg);

struct ShapAttribution {
  Eigen::VectorXd phi;
  double base_value = 0.0;
  double fx = 0.0;

  double efficiency_residual() const { return phi.sum() + base_value - fx; }
};

/// Shapley values by enumerating every coalition.
ShapAttribution exact_shapley(const Model& f, const Eigen::VectorXd& x, const BackgroundSet& bg);

/// Shapley-kernel weighted least squares over all proper non-empty
/// coalitions, with the empty/full coalitions imposed as constraints.
ShapAttribution kernel_shap(const Model& f, const Eigen::VectorXd& x, const BackgroundSet& bg);

/// Shapley kernel weight for a coalition of `size` out of `n` features.
double shapley_kernel_weight(int n, int size);

struct ImportanceSummary {
  Eigen::VectorXd mean_abs_phi;
  /// Feature indices by descending mean |phi|; ties keep column order.
  std::vector<int> ranking;
};

ImportanceSummary summarize(std::span<const ShapAttribution> attributions);

/// Seven-level quantization of a model output (round half away, clamp).
SignalLevel quantize_level(double value);

nlohmann::ordered_json force_plot_data(const ShapAttribution& attr, const Eigen::VectorXd& x,
                                       std::span<const std::string_view> labels,
                                       std::optional<Date> date = std::nullopt);

nlohmann::ordered_json summary_json(const ImportanceSummary& summary,
                                    std::span<const std::string_view> labels);

}  // namespace xsig
