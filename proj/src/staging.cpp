#include "mmsurv/staging.hpp"

#include <cmath>
#include <string>

#include "mmsurv/cohort.hpp"

namespace mmsurv {

void StagingThresholds::validate() const {
  if (!(b2m_low < b2m_high)) throw ValidationError("staging thresholds: b2m_low must be < b2m_high");
  if (!(ldh_young < ldh_old)) throw ValidationError("staging thresholds: ldh_young must be < ldh_old");
  if (b2m_low <= 0 || albumin_min <= 0 || ldh_young <= 0 || age_cut <= 0)
    throw ValidationError("staging thresholds must be positive");
}

RissStage riss_stage(double b2m, double ldh, double albumin, double age,
                     const StagingThresholds& t) {
  const double vals[] = {b2m, ldh, albumin, age};
  const char* names[] = {"b2m", "ldh", "albumin", "age"};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(vals[i]) || vals[i] < 0)
      throw DomainError(std::string("riss_stage: ") + names[i] + " must be finite and nonnegative");
  }
  // age exactly at the cut uses the older reference range
  const bool high_ldh = (age < t.age_cut) ? (ldh > t.ldh_young) : (ldh > t.ldh_old);
  if (b2m < t.b2m_low && albumin >= t.albumin_min && !high_ldh) return RissStage::stage1;
  if (b2m >= t.b2m_high && high_ldh) return RissStage::stage3;
  return RissStage::stage2;
}

StageSets stage_records(const std::vector<PatientRecord>& records, const StagingThresholds& t) {
  t.validate();
  StageSets sets;
  sets.per_record.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PatientRecord& r = records[i];
    for (int f : kMandatoryFeatures) {
      if (!r.present(f))
        throw ValidationError("record " + r.id + ": missing " + std::string(kFeatureNames[f]) +
                              " required for staging");
    }
    RissStage s;
    try {
      s = riss_stage(r.raw(kB2m), r.raw(kLdh), r.raw(kAlbumin), r.age(), t);
    } catch (const DomainError& e) {
      throw DomainError("record " + r.id + ": " + e.what());
    }
    sets.per_record.push_back(s);
    sets.members[stage_index(s)].push_back(static_cast<int>(i));
  }
  return sets;
}

}  // namespace mmsurv
