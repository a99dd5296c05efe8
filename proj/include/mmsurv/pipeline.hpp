#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmsurv/cohort.hpp"
#include "mmsurv/evaluation.hpp"
#include "mmsurv/training.hpp"

namespace mmsurv {

/// Full experiment protocol: split, auxiliary pair search, staging,
/// hyperparameter selection at alpha=0, alpha sweep, baselines, Shapley rank
/// tables, all written under one run directory with a manifest sufficient
/// for byte-exact reruns.
struct PipelineOptions {
  std::string cohort_path;
  RegKind reg = RegKind::aux_align;
  std::vector<double> alphas = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::uint64_t seed = 1;
  int cv_k = 5;
  StagingThresholds thresholds;
  SplitSpec split_spec;            // seed is overwritten from `seed`
  std::vector<int> layers = {kNumModelFeatures, 32, 16, 1};
  int batch_size = 32;
  int shap_permutations = kDefaultShapPermutations;
  Backend backend = default_backend();
  std::string out_dir = "runs";
  bool skip_selection = false;     // use fixed_lr/fixed_epochs instead of the CV grid
  double fixed_lr = 0.1;
  int fixed_epochs = 100;
};

struct ShapRankRow {
  double alpha = 0;
  std::vector<int> ranking;        // feature indices, best first
  std::vector<int> rank_of;        // 1-based rank per feature index
};

struct PipelineResult {
  std::string run_dir;
  SplitResult splits;
  PairSearchResult pair_search;
  TrainConfig selected_config;
  SweepResult sweep;
  std::vector<MetricsRow> baselines;
  std::vector<ShapRankRow> shap_rows;
  StageMeans train_stage_means;
  std::map<std::string, std::string> output_digests;  // relative path -> hex digest
};

PipelineResult run_pipeline(const PipelineOptions& opts);

std::string reg_kind_name(RegKind kind);  // "aa" / "stage" / "none"

/// `start:end:step` inclusive grid.
std::vector<double> parse_alpha_grid(const std::string& text);

/// id,stage staging report.
void write_stage_report(const Cohort& cohort, const StagingThresholds& t,
                        const std::string& out_path);

}  // namespace mmsurv
