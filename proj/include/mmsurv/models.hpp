#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsurv/cohort.hpp"
#include "mmsurv/common.hpp"

namespace mmsurv {

/// Probabilities are kept strictly inside (0,1); logs never see 0 or 1.
inline constexpr double kProbEps = 1e-7;

double clip_prob(double p);
double sigmoid(double z);

/// -[y ln h + (1-y) ln(1-h)] with h clipped.
double logistic_loss(double h, int y);

// --- Feed-forward predictor ----------------------------------------------

/// Fully-connected net, ReLU hidden layers, sigmoid output. Parameters are
/// packed in one flat vector, per layer: weights row-major (out x in), then
/// biases. The flat layout keeps gradient updates and finite-difference
/// probing trivial.
struct Mlp {
  std::vector<int> layers;     // sizes, input first, output last (must be 1)
  std::vector<double> params;  // packed
  std::uint64_t init_seed = 0;

  int param_count() const { return static_cast<int>(params.size()); }
  int weight_offset(int layer) const;  // layer in [1, layers.size())
  int bias_offset(int layer) const;

  const double* weights(int layer) const { return params.data() + weight_offset(layer); }
  const double* biases(int layer) const { return params.data() + bias_offset(layer); }
};

int mlp_param_count(const std::vector<int>& layers);

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
/// Bitwise deterministic for a given seed.
Mlp mlp_init(const std::vector<int>& layers, std::uint64_t seed);

/// Per-sample activation cache for backprop.
struct ForwardCache {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output activation
  std::vector<std::vector<double>> pre;  // pre[l] = pre-activation of layer l (l >= 1)
};

/// Forward pass for one sample; returns the clipped output probability and
/// fills the cache when given.
double mlp_forward(const Mlp& m, std::span<const double> x, ForwardCache* cache = nullptr);

/// Accumulates analytic parameter gradients for one sample into grad
/// (size = param_count). upstream_dz is dJ/dz at the output pre-activation.
void mlp_backward(const Mlp& m, const ForwardCache& cache, double upstream_dz,
                  std::span<double> grad);

/// Text serialization; round-trips bit-exactly.
void save_mlp(const Mlp& m, const std::string& path);
Mlp load_mlp(const std::string& path);

// --- Auxiliary logistic model ---------------------------------------------

struct LogisticModel {
  std::vector<double> w;
  double bias = 0;
};

struct LogregOptions {
  int max_iters = 500;
  double grad_tol = 1e-6;  // infinity norm
};

/// Full-batch gradient descent with backtracking line search on the mean
/// logistic loss. No regularization. Both classes must be present.
LogisticModel fit_logreg(const Matrix& x, const std::vector<int>& y,
                         const LogregOptions& opt = {});

double logreg_predict(const LogisticModel& m, std::span<const double> x);

/// Two-feature logistic regression over standardized inputs, bundled with
/// the imputation/standardization statistics of its fit set so it can score
/// raw patient records from any cohort. Frozen once fitted.
struct AuxiliaryModel {
  int feature_a = -1;  // model-feature indices, feature_a < feature_b
  int feature_b = -1;
  double w_a = 0;
  double w_b = 0;
  double bias = 0;
  // fit-set statistics for the two features
  double mean_a = 0, std_a = 1;
  double mean_b = 0, std_b = 1;

  std::string feature_a_name() const { return std::string(kFeatureNames[feature_a]); }
  std::string feature_b_name() const { return std::string(kFeatureNames[feature_b]); }
};

/// Soft label in (0,1) for a raw record, using the model's own statistics
/// for imputation and standardization.
double aux_predict(const AuxiliaryModel& m, const PatientRecord& r);

/// Fits the auxiliary model for a feature pair on the given records
/// (preprocessing fitted on those same records).
AuxiliaryModel fit_aux_model(const std::vector<PatientRecord>& records, int feature_a,
                             int feature_b, const LogregOptions& opt = {});

void save_aux_model(const AuxiliaryModel& m, const std::string& path);
AuxiliaryModel load_aux_model(const std::string& path);

}  // namespace mmsurv
