#include "xsig/shap_explain.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "xsig/errors.hpp"

namespace xsig {

namespace {

constexpr int kMaxExactFeatures = 20;

void check_instance(const Eigen::VectorXd& x, const BackgroundSet& bg) {
  if (bg.size() == 0) throw ArgumentError("background set is empty");
  if (x.size() != bg.features()) {
    throw ArgumentError("instance has " + std::to_string(x.size()) + " features, background has " +
                        std::to_string(bg.features()));
  }
  if (x.size() < 1 || x.size() > kMaxExactFeatures) {
    throw ArgumentError("coalition enumeration supports 1.." + std::to_string(kMaxExactFeatures) +
                        " features");
  }
}

// v(S) for every coalition S, indexed by bitmask.
std::vector<double> all_coalition_values(const Model& f, const Eigen::VectorXd& x,
                                         const BackgroundSet& bg) {
  const int n = static_cast<int>(x.size());
  std::vector<double> values(std::size_t{1} << n);
  for (Coalition s = 0; s < values.size(); ++s) values[s] = masked_value(f, x, s, bg);
  return values;
}

int popcount(Coalition s) { return __builtin_popcount(s); }

bool row_less(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m(a, j) != m(b, j)) return m(a, j) < m(b, j);
  }
  return false;
}

bool row_equal(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  return (m.row(a).array() == m.row(b).array()).all();
}

// Index of the first occurrence of each distinct row, in order of appearance.
std::vector<Eigen::Index> distinct_row_indices(const Eigen::MatrixXd& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return row_less(points, a, b); });
  std::vector<Eigen::Index> firsts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || !row_equal(points, order[i], order[i - 1])) firsts.push_back(order[i]);
  }
  std::sort(firsts.begin(), firsts.end());
  return firsts;
}

}  // namespace

Model make_vote_model(const WeightVector& w) {
  Eigen::VectorXd coef(kNumStrategies);
  for (int i = 0; i < kNumStrategies; ++i) coef[i] = w.w[i];
  coef /= static_cast<double>(w.sum());
  return [coef](const Eigen::Ref<const Eigen::VectorXd>& x) { return coef.dot(x); };
}

void BackgroundSet::validate() const {
  if (rows.rows() == 0) throw ArgumentError("background set is empty");
  if (weights.size() != rows.rows()) throw ArgumentError("background weights misaligned");
  if ((weights.array() <= 0.0).any()) throw ArgumentError("background weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw ArgumentError("background weights must sum to 1");
}

BackgroundSet BackgroundSet::uniform(const Eigen::MatrixXd& rows) {
  BackgroundSet bg;
  bg.rows = rows;
  bg.weights = Eigen::VectorXd::Constant(rows.rows(), 1.0 / static_cast<double>(rows.rows()));
  return bg;
}

Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points) {
  return static_cast<Eigen::Index>(distinct_row_indices(points).size());
}

KMeansResult kmeans(const Eigen::MatrixXd& points, Eigen::Index k, const KMeansOptions& options) {
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  const Eigen::Index n = points.rows();
  auto candidates = distinct_row_indices(points);
  if (k > static_cast<Eigen::Index>(candidates.size())) {
    throw ArgumentError("kmeans: k = " + std::to_string(k) + " exceeds " +
                        std::to_string(candidates.size()) + " distinct points");
  }

  // Fisher-Yates with modulo draws: fully determined by mt19937_64's output.
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::swap(candidates[i - 1], candidates[rng() % i]);
  }

  KMeansResult res;
  res.centroids.resize(k, points.cols());
  for (Eigen::Index c = 0; c < k; ++c) {
    res.centroids.row(c) = points.row(candidates[static_cast<std::size_t>(c)]);
  }
  res.assignment.assign(static_cast<std::size_t>(n), -1);

  auto assign = [&]() {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - res.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      auto& slot = res.assignment[static_cast<std::size_t>(i)];
      if (slot != best) {
        slot = best;
        changed = true;
      }
      inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
    return changed;
  };

  auto update = [&]() {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = res.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[c];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
  };

  assign();
  for (int it = 0; it < options.max_iter; ++it) {
    update();
    const bool changed = assign();
    ++res.iterations;
    if (!changed) {
      res.converged = true;
      break;
    }
  }

  Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
  for (auto c : res.assignment) ++counts[c];
  const Eigen::Index live = (counts.array() > 0).count();
  res.background.rows.resize(live, points.cols());
  res.background.weights.resize(live);
  Eigen::Index out = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    Eigen::RowVectorXd centroid = res.centroids.row(c);
    if (options.round_to_levels) {
      centroid = centroid.array().round().min(double(kMaxLevel)).max(-double(kMaxLevel));
    }
    res.background.rows.row(out) = centroid;
    res.background.weights[out] = static_cast<double>(counts[c]) / static_cast<double>(n);
    ++out;
  }
  return res;
}

double masked_value(const Model& f, const Eigen::VectorXd& x, Coalition subset,
                    const BackgroundSet& bg) {
  Eigen::VectorXd hybrid(x.size());
  double total = 0.0;
  for (Eigen::Index b = 0; b < bg.size(); ++b) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      hybrid[j] = (subset >> j) & 1u ? x[j] : bg.rows(b, j);
    }
    total += bg.weights[b] * f(hybrid);
  }
  return total;
}

ShapAttribution exact_shapley(const Model& f, const Eigen::VectorXd& x, const BackgroundSet& bg) {
  check_instance(x, bg);
  const int n = static_cast<int>(x.size());
  const auto values = all_coalition_values(f, x, bg);

  // Integer weights |S|! (n - |S| - 1)!, divided by n! once at the end so
  // exactly representable marginals stay exact.
  std::vector<double> factorial(static_cast<std::size_t>(n) + 1, 1.0);
  for (int i = 1; i <= n; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i) - 1] * i;
  std::vector<double> coalition_weight(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    coalition_weight[static_cast<std::size_t>(s)] =
        factorial[static_cast<std::size_t>(s)] * factorial[static_cast<std::size_t>(n - s - 1)];
  }

  ShapAttribution attr;
  attr.phi = Eigen::VectorXd::Zero(n);
  const Coalition full = (Coalition{1} << n) - 1;
  for (int i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    double acc = 0.0;
    for (Coalition s = 0; s <= full; ++s) {
      if (s & bit) continue;
      acc += coalition_weight[static_cast<std::size_t>(popcount(s))] * (values[s | bit] - values[s]);
    }
    attr.phi[i] = acc / factorial[static_cast<std::size_t>(n)];
  }
  attr.base_value = values[0];
  attr.fx = values[full];
  return attr;
}

double shapley_kernel_weight(int n, int size) {
  if (size <= 0 || size >= n) return std::numeric_limits<double>::infinity();
  double binom = 1.0;
  for (int i = 1; i <= size; ++i) binom = binom * (n - size + i) / i;
  return (n - 1) / (binom * size * (n - size));
}

ShapAttribution kernel_shap(const Model& f, const Eigen::VectorXd& x, const BackgroundSet& bg) {
  check_instance(x, bg);
  const int n = static_cast<int>(x.size());
  const auto values = all_coalition_values(f, x, bg);
  const Coalition full = (Coalition{1} << n) - 1;

  ShapAttribution attr;
  attr.base_value = values[0];
  attr.fx = values[full];
  const double delta = attr.fx - attr.base_value;
  if (n == 1) {
    attr.phi = Eigen::VectorXd::Constant(1, delta);
    return attr;
  }

  // Substitute phi_last = delta - sum(others) to enforce efficiency, then
  // solve the remaining (n - 1)-dim weighted least squares in sqrt-weight form.
  const Eigen::Index rows = static_cast<Eigen::Index>(full) - 1;
  Eigen::MatrixXd design(rows, n - 1);
  Eigen::VectorXd target(rows);
  const Coalition last_bit = Coalition{1} << (n - 1);
  Eigen::Index r = 0;
  for (Coalition s = 1; s < full; ++s, ++r) {
    const double sw = std::sqrt(shapley_kernel_weight(n, popcount(s)));
    const double z_last = (s & last_bit) ? 1.0 : 0.0;
    for (int i = 0; i < n - 1; ++i) design(r, i) = sw * ((((s >> i) & 1u) ? 1.0 : 0.0) - z_last);
    target[r] = sw * (values[s] - attr.base_value - z_last * delta);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < n - 1) throw NumericError("kernel_shap: singular coalition system");
  const Eigen::VectorXd head = qr.solve(target);

  attr.phi.resize(n);
  attr.phi.head(n - 1) = head;
  attr.phi[n - 1] = delta - head.sum();
  return attr;
}

ImportanceSummary summarize(std::span<const ShapAttribution> attributions) {
  if (attributions.empty()) throw ArgumentError("summarize: no attributions");
  const Eigen::Index n = attributions.front().phi.size();
  ImportanceSummary out;
  out.mean_abs_phi = Eigen::VectorXd::Zero(n);
  for (const auto& a : attributions) {
    if (a.phi.size() != n) throw ArgumentError("summarize: inconsistent feature counts");
    out.mean_abs_phi += a.phi.cwiseAbs();
  }
  out.mean_abs_phi /= static_cast<double>(attributions.size());
  out.ranking.resize(static_cast<std::size_t>(n));
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](int a, int b) { return out.mean_abs_phi[a] > out.mean_abs_phi[b]; });
  return out;
}

SignalLevel quantize_level(double value) {
  const double mag = std::min(std::floor(std::abs(value) + 0.5), double(kMaxLevel));
  const auto level = static_cast<SignalLevel>(mag);
  return value < 0.0 ? -level : level;
}

nlohmann::ordered_json force_plot_data(const ShapAttribution& attr, const Eigen::VectorXd& x,
                                       std::span<const std::string_view> labels,
                                       std::optional<Date> date) {
  const Eigen::Index n = attr.phi.size();
  if (x.size() != n || static_cast<Eigen::Index>(labels.size()) != n) {
    throw ArgumentError("force_plot_data: labels, instance and phi must align");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(attr.phi[a]) > std::abs(attr.phi[b]); });

  nlohmann::ordered_json rec;
  if (date) rec["date"] = date->iso();
  rec["base_value"] = attr.base_value;
  rec["fx"] = attr.fx;
  rec["decision"] = quantize_level(attr.fx);
  rec["features"] = nlohmann::ordered_json::array();
  for (int j : order) {
    nlohmann::ordered_json feat;
    feat["name"] = std::string(labels[static_cast<std::size_t>(j)]);
    // Signal inputs are integral levels; keep them integral in the record.
    if (x[j] == std::round(x[j])) {
      feat["input"] = static_cast<int>(x[j]);
    } else {
      feat["input"] = x[j];
    }
    feat["phi"] = attr.phi[j];
    rec["features"].push_back(std::move(feat));
  }
  return rec;
}

nlohmann::ordered_json summary_json(const ImportanceSummary& summary,
                                    std::span<const std::string_view> labels) {
  nlohmann::ordered_json out;
  nlohmann::ordered_json mean_abs;
  for (Eigen::Index j = 0; j < summary.mean_abs_phi.size(); ++j) {
    mean_abs[std::string(labels[static_cast<std::size_t>(j)])] = summary.mean_abs_phi[j];
  }
  out["mean_abs_phi"] = std::move(mean_abs);
  out["ranking"] = nlohmann::ordered_json::array();
  for (int j : summary.ranking) out["ranking"].push_back(std::string(labels[static_cast<std::size_t>(j)]));
  return out;
}

}  // namespace xsig
