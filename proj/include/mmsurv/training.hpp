#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmsurv/cohort.hpp"
#include "mmsurv/models.hpp"
#include "mmsurv/regularization.hpp"

namespace mmsurv {

struct TrainConfig {
  std::vector<int> layers = {kNumModelFeatures, 32, 16, 1};
  double learning_rate = 0.1;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double alpha = 0;
  ObjectiveMode mode = ObjectiveMode::loss_plus_reg;
  int trace_every = 1;  // epochs between full-train objective snapshots; 0 = final only
  Backend backend = default_backend();

  void validate() const;
};

struct TrainResult {
  Mlp model;
  std::vector<ObjectiveValue> trace;  // full-training-set objective per recorded epoch
  bool diverged = false;
  int epochs_run = 0;
};

/// Mini-batch gradient descent on the mode-selected objective. The shuffle
/// order per epoch is derived from the config seed, so a (seed, config,
/// data) triple always produces the same parameters. Regularizers are
/// evaluated on the current mini-batch during optimization; the recorded
/// trace holds full-training-set values. A non-finite objective stops
/// training with diverged=true and the last finite parameters.
TrainResult train(const TrainConfig& config, const Matrix& x, const std::vector<int>& y,
                  const RegContext& reg);

// --- Cross-validation -----------------------------------------------------

struct CvPlan {
  int k = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Fold of each record, keyed to a seeded permutation of the sorted record
/// ids: the assignment is invariant to the order records arrive in. Fold
/// sizes differ by at most one.
std::vector<int> fold_assignments(const std::vector<PatientRecord>& records, const CvPlan& plan);

struct FoldMetrics {
  int fold = 0;
  double val_loss = 0;
  double val_accuracy = 0;
  std::optional<double> val_auc;  // undefined for single-class folds
  bool diverged = false;
};

struct CvResult {
  double mean_val_loss = 0;  // diverged folds count as +inf
  std::vector<FoldMetrics> folds;
  std::optional<double> mean_auc;  // over folds where defined
  std::vector<std::string> warnings;
};

/// Per fold: preprocessing fitted on the k-1 training folds, model trained
/// there, metrics on the held-out fold.
CvResult kfold_cv(const std::vector<PatientRecord>& records, const CvPlan& plan,
                  const TrainConfig& config, RegKind reg_kind,
                  const std::optional<AuxiliaryModel>& aux,
                  const StagingThresholds& thresholds = {});

/// argmin of mean validation loss over the grid (all configs alpha = 0);
/// ties keep the earliest grid entry.
struct SelectionResult {
  int best_index = 0;
  std::vector<double> scores;
};
SelectionResult select_hyperparams(const std::vector<TrainConfig>& grid,
                                   const std::vector<PatientRecord>& records,
                                   const CvPlan& plan);

/// Default selection grid: lr in {0.3, 0.1, 0.03, 0.01} x epochs in {100, 300}.
std::vector<TrainConfig> default_selection_grid(const TrainConfig& base);

// --- Auxiliary feature-pair search -----------------------------------------

struct PairScore {
  int feature_a = 0;
  int feature_b = 0;
  double mean_val_loss = 0;
  bool degenerate = false;
};

struct PairSearchResult {
  AuxiliaryModel model;  // refitted on the aux split
  std::vector<PairScore> scores;  // all C(n,2) pairs, enumeration order
  int best_index = 0;
};

/// Exhaustive search over all feature pairs: each pair is scored by k-fold
/// validation loss of a logistic regression refitted per fold on the fold's
/// training portion (kf records), and the winning pair is refitted on the
/// aux records for the final frozen model. Degenerate pair fits are skipped
/// with a warning; all-degenerate is an error.
PairSearchResult search_aux_pair(const std::vector<PatientRecord>& kf_records,
                                 const std::vector<PatientRecord>& aux_records,
                                 const CvPlan& plan,
                                 const std::vector<int>& candidates = {});

// --- Alpha sweep ------------------------------------------------------------

struct SweepRow {
  double alpha = 0;
  double accuracy = 0;
  std::optional<double> auc;
  double loss1 = 0;     // mean logistic loss on the evaluation set
  double reg_loss = 0;  // regularizer value on the evaluation set
  bool failed = false;
};

struct AlphaRun {
  double alpha = 0;
  Mlp model;
  SweepRow row;
  bool failed = false;
  std::string failure;
};

struct SweepResult {
  RegKind kind = RegKind::none;
  std::vector<AlphaRun> runs;

  std::vector<SweepRow> rows() const;
};

/// One model per alpha, each freshly initialized from seed ^ hash(alpha) so
/// the grid points are independent draws. Training happens on the kf records
/// (preprocessing fitted there); rows are evaluated on the test records with
/// training-time statistics (mu, auxiliary model, preprocessing) frozen.
/// Per-alpha failures are recorded and the sweep continues.
SweepResult run_sweep(const std::vector<double>& alphas, const TrainConfig& config,
                      RegKind kind, const std::vector<PatientRecord>& kf_records,
                      const std::vector<PatientRecord>& test_records,
                      const std::optional<AuxiliaryModel>& aux,
                      const StagingThresholds& thresholds = {});

std::uint64_t alpha_seed(std::uint64_t base, double alpha);

}  // namespace mmsurv
