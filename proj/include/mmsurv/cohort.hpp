#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmsurv/common.hpp"
#include "mmsurv/staging.hpp"

namespace mmsurv {

// Record schema: age plus 17 clinical measurements, in CSV column order.
// The model feature vector uses the first kNumModelFeatures of these (age and
// the 16 blood biomarkers); plasma_cell_pct is carried through ingestion,
// imputation and serialization but is not part of the default model matrix.
inline constexpr int kNumRecordFeatures = 18;
inline constexpr int kNumModelFeatures = 17;

enum Feature : int {
  kAge = 0,
  kAlbumin,
  kLdh,
  kB2m,
  kHemoglobin,
  kPlatelets,
  kCreatinine,
  kCrp,
  kAlp,
  kFlcLambda,
  kFlcKappa,
  kLeukocytes,
  kProtein,
  kIonizedCalcium,
  kIga,
  kIgg,
  kIgm,
  kPlasmaCellPct,
};

extern const std::array<std::string_view, kNumRecordFeatures> kFeatureNames;

// age, albumin, ldh, b2m: the inclusion criterion guarantees these.
inline constexpr std::array<int, 4> kMandatoryFeatures = {kAge, kAlbumin, kLdh, kB2m};

bool is_mandatory_feature(int f);
int feature_index(std::string_view name);  // -1 when unknown

struct PatientRecord {
  std::string id;
  std::array<std::optional<double>, kNumRecordFeatures> features;
  int label = 0;  // 1 = died within five years

  double age() const { return *features[kAge]; }
  double raw(int f) const { return *features[f]; }
  bool present(int f) const { return features[f].has_value(); }
};

/// Per-feature imputation and standardization statistics, fitted on a
/// designated subset and then applied anywhere. The imputation value for a
/// feature is the mean of its observed values on the fit set; because
/// imputing with the mean leaves the column mean unchanged, the same value
/// centers the standardized column. The stddev is the population stddev of
/// the imputed fit column.
struct Preprocessor {
  bool fitted = false;
  std::array<double, kNumRecordFeatures> mean{};
  std::array<double, kNumRecordFeatures> stddev{};
  std::array<bool, kNumRecordFeatures> constant{};

  /// Raw value with missing entries replaced by the fit-set mean.
  double imputed(const PatientRecord& r, int f) const;
  /// Standardized value; constant columns map to 0.
  double standardized(const PatientRecord& r, int f) const;

  void require_fitted() const;
};

struct Cohort {
  std::vector<PatientRecord> records;
  Preprocessor prep;  // empty until fit_preprocessor

  int size() const { return static_cast<int>(records.size()); }
  std::vector<std::string> ids() const;
};

/// Fits imputation means and standardization statistics on the records named
/// by fit_indices (all records when empty would be a caller bug: must be
/// nonempty). A feature with no observed value in the fit set is an error.
Preprocessor fit_preprocessor(const std::vector<PatientRecord>& records,
                              const std::vector<int>& fit_indices);

/// Imputes and standardizes into an m x kNumModelFeatures matrix.
Matrix design_matrix(const std::vector<PatientRecord>& records, const Preprocessor& prep);

std::vector<int> labels_of(const std::vector<PatientRecord>& records);

struct SplitSpec {
  std::uint64_t seed = 1;
  std::array<double, 3> fractions = {122.0 / 812.0, 568.0 / 812.0, 122.0 / 812.0};
  std::optional<std::array<int, 3>> fixed_counts;

  void validate(int n_records) const;
};

struct SplitResult {
  std::array<std::vector<int>, 3> indices;  // aux, kf, test (cohort row indices)

  const std::vector<int>& aux() const { return indices[0]; }
  const std::vector<int>& kf() const { return indices[1]; }
  const std::vector<int>& test() const { return indices[2]; }
};

/// Deterministic disjoint exhaustive partition. Sizes come from fixed_counts
/// when given, otherwise from the fractions by the largest-remainder method
/// (ties broken in aux, kf, test order).
SplitResult split(const Cohort& cohort, const SplitSpec& spec);

std::vector<PatientRecord> subset(const std::vector<PatientRecord>& records,
                                  const std::vector<int>& indices);

// --- CSV ---------------------------------------------------------------

extern const std::string kCsvHeader;

/// Reads a cohort CSV. Empty cells are missing values; mandatory fields
/// (id, age, albumin, ldh, b2m, label) must be present; labels are {0,1};
/// duplicate ids are rejected. Row order is preserved.
Cohort load_csv(const std::string& path);
void save_csv(const Cohort& cohort, const std::string& path);

// --- Synthetic generation ----------------------------------------------

struct FeatureDistribution {
  enum class Kind { normal, log_normal };
  Kind kind = Kind::normal;
  double loc = 0;       // mean (normal) or log-median (log_normal)
  double scale = 1;     // sd (normal) or log-sd (log_normal)
  double severity = 0;  // loading on the shared latent severity factor
  double lo = 0;        // clamp bounds, raw scale
  double hi = 1e12;
  double missing_rate = 0;  // in [0,1); 0 for mandatory features
};

/// Ground-truth risk: sigma(w0 + w_age*age + w_ldh*ldh + w_b2m*b2m - w_albumin*albumin),
/// applied to raw (unstandardized) values.
struct RiskWeights {
  double w0 = 0;
  double w_age = 0;
  double w_ldh = 0;
  double w_b2m = 0;
  double w_albumin = 0;
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int n_patients = 812;
  std::array<FeatureDistribution, kNumRecordFeatures> dists;
  RiskWeights risk;
  double overall_rate_target = 417.0 / 812.0;
  std::array<double, 3> stage_rate_targets = {0.162, 0.546, 0.698};
  double stage_rate_tolerance = 0.06;

  void validate() const;
  std::string to_kv() const;
  static SyntheticSpec from_kv(const std::string& text);
};

/// The calibrated defaults shipped with the tool (seed included).
SyntheticSpec default_synthetic_spec();

struct GeneratedCohort {
  Cohort cohort;
  double intercept_shift = 0;  // bounded calibration result, see generate_synthetic
  double achieved_overall_rate = 0;
  std::array<double, 3> achieved_stage_rates{};
  std::array<int, 3> stage_counts{};
};

/// Deterministic cohort generation. Features are drawn first; a bounded
/// bisection then shifts the risk intercept so the cohort's mean ground-truth
/// risk matches the overall target, and labels are drawn from the shifted
/// risk. Per-stage achieved label rates outside the declared tolerance raise
/// CalibrationError reporting the achieved rates.
GeneratedCohort generate_synthetic(const SyntheticSpec& spec);

}  // namespace mmsurv
