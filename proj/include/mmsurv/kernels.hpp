#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "mmsurv/common.hpp"
#include "mmsurv/models.hpp"
#include "mmsurv/staging.hpp"

namespace mmsurv {

/// Batch kernels exist in two implementations: a plain serial reference and
/// an OpenMP one. Both use the same fixed-block accumulation order, so their
/// results are bitwise identical and independent of the thread count; the
/// serial build is kept as the reference the parallel one is tested against.
enum class Backend { serial, openmp };

Backend default_backend();

/// Samples per accumulation block. Reductions sum within a block in sample
/// order and across blocks in block order, which pins the floating-point
/// summation tree regardless of scheduling.
inline constexpr int kReduceBlock = 256;

/// Flat per-layer activation storage for a batch: acts[l] and pres[l] hold
/// n * layers[l] doubles, sample-major.
struct BatchCache {
  int n = 0;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> pres;

  void resize(const std::vector<int>& layers, int n_samples);
};

namespace kernels {

/// Forward pass over the rows of x; writes clipped probabilities to probs
/// (size n). cache may be null when no backward pass follows.
void forward_batch(const Mlp& m, const Matrix& x, std::span<double> probs, BatchCache* cache,
                   Backend backend);

/// Accumulates the total parameter gradient given per-sample upstream dJ/dz
/// at the output pre-activation. grad must be zero-initialized by the caller
/// (size = param_count).
void backward_batch(const Mlp& m, const Matrix& x, const BatchCache& cache,
                    std::span<const double> upstream_dz, std::span<double> grad,
                    Backend backend);

/// Mean logistic loss over aligned probability/label spans.
double mean_logistic_loss(std::span<const double> probs, std::span<const int> labels,
                          Backend backend);

/// Per-sample logistic losses (no reduction).
void logistic_loss_batch(std::span<const double> probs, std::span<const int> labels,
                         std::span<double> out, Backend backend);

/// Mean Bernoulli KL divergence KL(g_i || h_i) over the batch.
double aa_divergence_mean(std::span<const double> g, std::span<const double> h, Backend backend);

/// Stage-consistency penalty: sum over stages of the within-stage mean
/// squared deviation of h from mu. Samples whose stage has no defined mu are
/// rejected by the caller (see regularization); counts holds |D^(s)| of the
/// evaluation set itself.
double sc_penalty(std::span<const double> h, std::span<const int> stage_of,
                  const std::array<double, kNumStages>& mu,
                  const std::array<int, kNumStages>& counts, Backend backend);

}  // namespace kernels

}  // namespace mmsurv
