#pragma once

#include <array>
#include <vector>

#include "mmsurv/common.hpp"

namespace mmsurv {

enum class RissStage : int { stage1 = 1, stage2 = 2, stage3 = 3 };

inline constexpr int kNumStages = 3;

/// Stage index in [0, 3) for array addressing.
constexpr int stage_index(RissStage s) { return static_cast<int>(s) - 1; }

/// Clinical thresholds for the cytogenetics-free R-ISS assignment.
/// Defaults follow the reference ranges the procedure was defined with;
/// other laboratories may substitute their own LDH cuts.
struct StagingThresholds {
  double b2m_low = 3.5;     // mg/L
  double b2m_high = 5.5;    // mg/L
  double albumin_min = 35;  // g/L
  double ldh_young = 235;   // U/L, age < age_cut
  double ldh_old = 255;     // U/L, age >= age_cut
  double age_cut = 70;      // years

  void validate() const;
};

/// Assigns an R-ISS stage from raw clinical values (never standardized ones).
/// LDH is "high" when strictly above the age-dependent cut. Stage 1 requires
/// B2M < b2m_low, albumin >= albumin_min and LDH not high; stage 3 requires
/// B2M >= b2m_high and high LDH; everything else is stage 2.
RissStage riss_stage(double b2m, double ldh, double albumin, double age,
                     const StagingThresholds& t = {});

struct StageSets {
  std::vector<RissStage> per_record;
  std::array<std::vector<int>, kNumStages> members;  // record indices by stage

  std::array<int, kNumStages> counts() const {
    return {static_cast<int>(members[0].size()), static_cast<int>(members[1].size()),
            static_cast<int>(members[2].size())};
  }
};

struct PatientRecord;  // cohort.hpp

/// Stages every record of a cohort. Errors carry the offending record id.
StageSets stage_records(const std::vector<PatientRecord>& records,
                        const StagingThresholds& t = {});

}  // namespace mmsurv
