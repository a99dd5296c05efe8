#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "mmsurv/kernels.hpp"
#include "mmsurv/models.hpp"
#include "mmsurv/staging.hpp"

namespace mmsurv {

enum class RegKind { none, aux_align, stage_consistency };

/// Per-stage mean outcome mu^(s), computed on training labels only. A stage
/// absent from the training data has no defined mean; it contributes nothing
/// to the penalty but evaluating a nonempty stage against an undefined mean
/// is an error.
struct StageMeans {
  std::array<double, kNumStages> mu{};
  std::array<bool, kNumStages> defined{};
};

StageMeans stage_means(const std::vector<int>& labels, const StageSets& sets);

/// Bernoulli KL divergence g ln(g/h) + (1-g) ln((1-g)/(1-h)), with both
/// arguments clipped to [kProbEps, 1-kProbEps]. Nonnegative, zero iff g = h.
double kl_bernoulli(double g, double h);

/// d KL(g || sigmoid(z)) / dz = h - g at h = sigmoid(z). The whole
/// auxiliary-alignment gradient path reduces to this difference.
double aa_gradient_logit(double g_val, double h_val);

/// Mean KL between the frozen auxiliary soft labels and the predictor
/// outputs over a dataset; both spans aligned by sample.
double aa_regularizer(std::span<const double> g_vals, std::span<const double> h_vals,
                      Backend backend = default_backend());

/// Eq-style stage-consistency value over a dataset: per-sample stage labels,
/// within-set stage counts, and frozen training means. Throws when a sample
/// belongs to a stage with no defined training mean.
double sc_regularizer(std::span<const double> h_vals, std::span<const int> stage_of,
                      const StageMeans& means, Backend backend = default_backend());

/// A regularizer bound to sample-aligned data: for aux_align the frozen
/// auxiliary outputs g(x_i), for stage_consistency the per-sample stage and
/// the frozen training means. The auxiliary model itself is never updated.
struct RegContext {
  RegKind kind = RegKind::none;
  std::vector<double> aux_g;
  std::vector<int> stage_of;
  StageMeans means;

  static RegContext none();
  static RegContext aux(std::vector<double> g_vals);
  static RegContext stages(std::vector<int> stage_of, StageMeans means);

  RegContext slice(std::span<const int> rows) const;
  void check_rows(int n) const;
};

enum class ObjectiveMode { loss_plus_reg, loss_only, reg_only };

struct ObjectiveValue {
  double total = 0;
  double data_term = 0;  // mean logistic loss, always reported
  double reg_term = 0;
  double alpha = 0;
};

/// Evaluates data term, regularizer and their weighted total on a batch.
/// reg_only keeps the data term out of `total` but still reports it.
ObjectiveValue objective(const Mlp& m, const Matrix& x, const std::vector<int>& y,
                         const RegContext& reg, double alpha,
                         ObjectiveMode mode = ObjectiveMode::loss_plus_reg,
                         Backend backend = default_backend());

/// Exact analytic gradient of the mode-selected objective w.r.t. all
/// predictor parameters. The data and aux-align paths feed h-y and h-g
/// upstream in logit space; stage consistency feeds 2(h-mu)/|D^(s)| through
/// the output sigmoid. Returns the objective value alongside.
ObjectiveValue objective_gradient(const Mlp& m, const Matrix& x, const std::vector<int>& y,
                                  const RegContext& reg, double alpha, ObjectiveMode mode,
                                  std::span<double> grad_out,
                                  Backend backend = default_backend());

}  // namespace mmsurv
