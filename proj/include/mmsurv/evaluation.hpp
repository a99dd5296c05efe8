#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmsurv/common.hpp"
#include "mmsurv/kernels.hpp"

namespace mmsurv {

/// Fraction of samples where (score >= threshold) matches the label.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

/// Mann-Whitney AUC with ties counted 1/2; nullopt when only one class is
/// present.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsRow {
  std::string dataset;
  std::string model;
  double acc = 0;
  std::optional<double> auc;
};

// --- Shapley attribution ----------------------------------------------------

using ModelFn = std::function<double(std::span<const double>)>;

inline constexpr int kShapExactMaxFeatures = 12;

/// Classic Shapley values by full coalition enumeration over the features in
/// `subset` (at most 12); features outside the subset stay pinned at x.
/// Absent coalition members take baseline values. Entries outside the subset
/// are 0. Satisfies efficiency: sum phi = f(x) - f(x with subset at baseline).
std::vector<double> shapley_exact(const ModelFn& f, std::span<const double> x,
                                  std::span<const double> baseline,
                                  const std::vector<int>& subset);

/// Permutation-sampling estimator over all features: mean marginal
/// contribution along seeded random feature orderings. Unbiased for the
/// exact value; deterministic given the seed.
std::vector<double> shapley_sampled(const ModelFn& f, std::span<const double> x,
                                    std::span<const double> baseline, int n_permutations,
                                    std::uint64_t seed);

inline constexpr int kDefaultShapPermutations = 2000;

struct ShapReport {
  std::vector<double> mean_abs;  // per feature, over the evaluation set
  std::vector<int> ranking;      // feature indices, best (largest mean |phi|) first
  int n_permutations = 0;        // 0 = exact
  std::uint64_t seed = 0;
};

/// Mean absolute Shapley value per feature over the rows of x, sampled
/// estimator, per-instance seeds derived from the base seed. Ranking ties
/// break toward the lower feature index.
ShapReport mean_abs_shap(const ModelFn& f, const Matrix& x, std::span<const double> baseline,
                         int n_permutations, std::uint64_t seed,
                         Backend backend = default_backend());

std::vector<int> rank_features(std::span<const double> mean_abs);

/// 1-based rank of each feature under the report's ranking.
std::vector<int> feature_ranks(const ShapReport& report);

}  // namespace mmsurv
