#include "mmsurv/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mmsurv/models.hpp"
#include "mmsurv/rng.hpp"

namespace mmsurv {

const std::array<std::string_view, kNumRecordFeatures> kFeatureNames = {
    "age",        "albumin",    "ldh",       "b2m",     "hemoglobin",      "platelets",
    "creatinine", "crp",        "alp",       "flc_lambda", "flc_kappa",    "leukocytes",
    "protein",    "ionized_calcium", "iga",  "igg",     "igm",             "plasma_cell_pct"};

bool is_mandatory_feature(int f) {
  return f == kAge || f == kAlbumin || f == kLdh || f == kB2m;
}

int feature_index(std::string_view name) {
  for (int i = 0; i < kNumRecordFeatures; ++i)
    if (kFeatureNames[i] == name) return i;
  return -1;
}

// --- Preprocessor -----------------------------------------------------------

void Preprocessor::require_fitted() const {
  if (!fitted) throw StateError("preprocessing statistics not fitted");
}

double Preprocessor::imputed(const PatientRecord& r, int f) const {
  require_fitted();
  return r.present(f) ? r.raw(f) : mean[f];
}

double Preprocessor::standardized(const PatientRecord& r, int f) const {
  require_fitted();
  if (constant[f]) return 0.0;
  return (imputed(r, f) - mean[f]) / stddev[f];
}

Preprocessor fit_preprocessor(const std::vector<PatientRecord>& records,
                              const std::vector<int>& fit_indices) {
  if (fit_indices.empty()) throw ValidationError("fit_preprocessor: empty fit set");
  Preprocessor p;
  const double n = static_cast<double>(fit_indices.size());
  for (int f = 0; f < kNumRecordFeatures; ++f) {
    double sum = 0;
    int observed = 0;
    for (int i : fit_indices) {
      const PatientRecord& r = records.at(i);
      if (r.present(f)) {
        sum += r.raw(f);
        ++observed;
      }
    }
    if (observed == 0)
      throw ValidationError("fit_preprocessor: feature " + std::string(kFeatureNames[f]) +
                            " has no observed value in the fit set");
    p.mean[f] = sum / observed;
    // population stddev of the imputed column; missing cells sit exactly at
    // the mean, contributing zero
    double ss = 0;
    for (int i : fit_indices) {
      const PatientRecord& r = records[i];
      if (r.present(f)) {
        const double d = r.raw(f) - p.mean[f];
        ss += d * d;
      }
    }
    p.stddev[f] = std::sqrt(ss / n);
    p.constant[f] = p.stddev[f] < 1e-12;
  }
  p.fitted = true;
  return p;
}

Matrix design_matrix(const std::vector<PatientRecord>& records, const Preprocessor& prep) {
  prep.require_fitted();
  Matrix x(static_cast<int>(records.size()), kNumModelFeatures);
  for (int i = 0; i < x.rows; ++i)
    for (int f = 0; f < kNumModelFeatures; ++f)
      x.at(i, f) = prep.standardized(records[i], f);
  return x;
}

std::vector<int> labels_of(const std::vector<PatientRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.label);
  return y;
}

std::vector<std::string> Cohort::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

// --- Split -------------------------------------------------------------------

void SplitSpec::validate(int n_records) const {
  if (fixed_counts) {
    const auto& c = *fixed_counts;
    if (c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] + c[1] + c[2] != n_records)
      throw ValidationError("split: fixed counts must be nonnegative and sum to the cohort size");
    return;
  }
  double sum = 0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ValidationError("split: fractions must lie in (0,1)");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split: fractions must sum to 1");
}

SplitResult split(const Cohort& cohort, const SplitSpec& spec) {
  const int m = cohort.size();
  if (m == 0) throw ValidationError("split: empty cohort");
  spec.validate(m);

  std::array<int, 3> counts;
  if (spec.fixed_counts) {
    counts = *spec.fixed_counts;
  } else {
    // largest-remainder rounding, ties broken in (aux, kf, test) order
    std::array<double, 3> exact;
    int base_total = 0;
    for (int s = 0; s < 3; ++s) {
      exact[s] = spec.fractions[s] * m;
      counts[s] = static_cast<int>(std::floor(exact[s]));
      base_total += counts[s];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (exact[a] - std::floor(exact[a])) > (exact[b] - std::floor(exact[b]));
    });
    for (int r = 0; r < m - base_total; ++r) counts[order[r % 3]] += 1;
  }

  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(idx);

  SplitResult out;
  int pos = 0;
  for (int s = 0; s < 3; ++s) {
    out.indices[s].assign(idx.begin() + pos, idx.begin() + pos + counts[s]);
    std::sort(out.indices[s].begin(), out.indices[s].end());
    pos += counts[s];
  }
  return out;
}

std::vector<PatientRecord> subset(const std::vector<PatientRecord>& records,
                                  const std::vector<int>& indices) {
  std::vector<PatientRecord> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(records.at(i));
  return out;
}

// --- CSV ----------------------------------------------------------------------

const std::string kCsvHeader =
    "id,age,albumin,ldh,b2m,hemoglobin,platelets,creatinine,crp,alp,flc_lambda,flc_kappa,"
    "leukocytes,protein,ionized_calcium,iga,igg,igm,plasma_cell_pct,label";

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& cell, int row, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ParseError("row " + std::to_string(row) + ", column " + column +
                     ": malformed numeric cell '" + cell + "'");
  return v;
}

}  // namespace

Cohort load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cohort file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  {
    auto cells = split_line(line);
    auto expect = split_line(kCsvHeader);
    if (cells.size() != expect.size())
      throw ParseError(path + ": header has " + std::to_string(cells.size()) +
                       " columns, expected " + std::to_string(expect.size()));
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (trim(cells[i]) != expect[i])
        throw ParseError(path + ": header column " + std::to_string(i + 1) + " is '" +
                         cells[i] + "', expected '" + expect[i] + "'");
  }

  Cohort cohort;
  std::unordered_set<std::string> seen_ids;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != kNumRecordFeatures + 2)
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(kNumRecordFeatures + 2) + " cells, got " +
                       std::to_string(cells.size()));
    PatientRecord r;
    r.id = trim(cells[0]);
    if (r.id.empty()) throw ValidationError("row " + std::to_string(row) + ": empty id");
    if (!seen_ids.insert(r.id).second)
      throw ValidationError("row " + std::to_string(row) + ": duplicate id '" + r.id + "'");

    for (int f = 0; f < kNumRecordFeatures; ++f) {
      const std::string cell = trim(cells[f + 1]);
      const std::string column(kFeatureNames[f]);
      if (cell.empty()) {
        if (is_mandatory_feature(f))
          throw ValidationError("row " + std::to_string(row) + ": mandatory field " + column +
                                " is missing");
        r.features[f] = std::nullopt;
      } else {
        r.features[f] = parse_cell(cell, row, column);
      }
    }
    if (r.age() < 0) throw ValidationError("row " + std::to_string(row) + ": negative age");

    const std::string label_cell = trim(cells.back());
    if (label_cell.empty())
      throw ValidationError("row " + std::to_string(row) + ": mandatory field label is missing");
    if (label_cell == "0")
      r.label = 0;
    else if (label_cell == "1")
      r.label = 1;
    else
      throw ValidationError("row " + std::to_string(row) + ": label '" + label_cell +
                            "' not in {0,1}");
    cohort.records.push_back(std::move(r));
  }
  return cohort;
}

void save_csv(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cohort file: " + path);
  out << kCsvHeader << "\n";
  for (const auto& r : cohort.records) {
    out << r.id;
    for (int f = 0; f < kNumRecordFeatures; ++f) {
      out << ',';
      if (r.present(f)) out << format_exact(r.raw(f));
    }
    out << ',' << r.label << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

// --- Synthetic generation -------------------------------------------------------

void SyntheticSpec::validate() const {
  if (n_patients <= 0) throw ValidationError("synthetic spec: n_patients must be positive");
  for (int f = 0; f < kNumRecordFeatures; ++f) {
    const auto& d = dists[f];
    if (d.scale <= 0)
      throw ValidationError("synthetic spec: nonpositive scale for " +
                            std::string(kFeatureNames[f]));
    if (d.missing_rate < 0 || d.missing_rate >= 1)
      throw ValidationError("synthetic spec: missing rate out of [0,1) for " +
                            std::string(kFeatureNames[f]));
    if (is_mandatory_feature(f) && d.missing_rate != 0)
      throw ValidationError("synthetic spec: mandatory feature " +
                            std::string(kFeatureNames[f]) + " must have missing rate 0");
  }
  if (!(overall_rate_target > 0 && overall_rate_target < 1))
    throw ValidationError("synthetic spec: overall rate target must lie in (0,1)");
  if (stage_rate_tolerance <= 0)
    throw ValidationError("synthetic spec: stage rate tolerance must be positive");
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec s;
  s.seed = 20250614;
  s.n_patients = 812;
  using K = FeatureDistribution::Kind;
  auto norm = [](double mean, double sd, double sev, double lo, double hi, double miss) {
    return FeatureDistribution{K::normal, mean, sd, sev, lo, hi, miss};
  };
  auto logn = [](double median, double logsd, double sev, double miss) {
    return FeatureDistribution{K::log_normal, std::log(median), logsd, sev, 0.0, 1e12, miss};
  };
  s.dists[kAge] = norm(68, 10, 0.0, 30, 95, 0);
  s.dists[kAlbumin] = norm(35, 5.2, -2.1, 12, 55, 0);
  s.dists[kLdh] = logn(196, 0.26, 0.17, 0);
  s.dists[kB2m] = logn(4.05, 0.40, 0.34, 0);
  s.dists[kHemoglobin] = norm(113, 17, -6.0, 40, 180, 0.05);
  s.dists[kPlatelets] = norm(233, 78, -14.0, 5, 700, 0.05);
  s.dists[kCreatinine] = logn(85, 0.34, 0.16, 0.03);
  s.dists[kCrp] = logn(4.2, 0.95, 0.30, 0.08);
  s.dists[kAlp] = logn(73, 0.36, 0.10, 0.06);
  s.dists[kFlcLambda] = logn(46, 1.25, 0.24, 0.10);
  s.dists[kFlcKappa] = logn(56, 1.25, 0.24, 0.10);
  s.dists[kLeukocytes] = norm(6.4, 2.1, 0.25, 0.5, 30, 0.04);
  s.dists[kProtein] = norm(88, 15, 3.0, 35, 150, 0.05);
  s.dists[kIonizedCalcium] = norm(1.26, 0.09, 0.02, 0.8, 2.2, 0.12);
  s.dists[kIga] = logn(2.3, 1.1, 0.12, 0.10);
  s.dists[kIgg] = logn(11, 0.85, 0.10, 0.08);
  s.dists[kIgm] = logn(0.52, 0.95, -0.05, 0.12);
  s.dists[kPlasmaCellPct] = norm(32, 22, 6.0, 1, 97, 0.25);
  // calibrated once against the stage-rate targets and frozen; age and LDH
  // carry the strongest standardized effects
  s.risk.w0 = -7.39;
  s.risk.w_age = 0.088;
  s.risk.w_ldh = 0.0105;
  s.risk.w_b2m = 0.28;
  s.risk.w_albumin = 0.065;
  return s;
}

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double risk_logit(const RiskWeights& w, const PatientRecord& r) {
  return w.w0 + w.w_age * r.age() + w.w_ldh * r.raw(kLdh) + w.w_b2m * r.raw(kB2m) -
         w.w_albumin * r.raw(kAlbumin);
}

}  // namespace

GeneratedCohort generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.n_patients;
  Rng rng(spec.seed);

  GeneratedCohort out;
  auto& records = out.cohort.records;
  records.resize(n);

  // pass 1: features. Draw order per record is fixed: severity, then one
  // normal per feature in schema order, then one uniform per optional
  // feature for the missingness mask.
  int width = 1;
  for (int tmp = n; tmp >= 10; tmp /= 10) ++width;
  for (int i = 0; i < n; ++i) {
    PatientRecord& r = records[i];
    {
      std::ostringstream id;
      id << "synth-";
      id.width(width);
      id.fill('0');
      id << (i + 1);
      r.id = id.str();
    }
    const double u = rng.normal();
    for (int f = 0; f < kNumRecordFeatures; ++f) {
      const auto& d = spec.dists[f];
      const double eps = rng.normal();
      double v;
      if (d.kind == FeatureDistribution::Kind::normal) {
        v = clamp(d.loc + d.severity * u + d.scale * eps, d.lo, d.hi);
      } else {
        v = clamp(std::exp(d.loc + d.severity * u + d.scale * eps), d.lo, d.hi);
      }
      if (f == kAge) v = std::round(v);
      r.features[f] = v;
    }
    for (int f = 0; f < kNumRecordFeatures; ++f) {
      if (is_mandatory_feature(f)) continue;
      const double miss_draw = rng.uniform01();
      if (miss_draw < spec.dists[f].missing_rate) r.features[f] = std::nullopt;
    }
  }

  // pass 2: bounded bisection of an intercept shift so the cohort mean risk
  // matches the overall target; mean(sigmoid(logit + delta)) is monotone in
  // delta, so the bracket [-8, 8] always contains the solution when one exists.
  std::vector<double> logits(n);
  for (int i = 0; i < n; ++i) logits[i] = risk_logit(spec.risk, records[i]);
  auto mean_risk = [&](double delta) {
    double s = 0;
    for (double z : logits) s += sigmoid(z + delta);
    return s / n;
  };
  double lo = -8, hi = 8;
  if (mean_risk(lo) > spec.overall_rate_target || mean_risk(hi) < spec.overall_rate_target) {
    throw CalibrationError("synthetic calibration: overall rate target " +
                           format_metric(spec.overall_rate_target) +
                           " unreachable within intercept bounds (achieved " +
                           format_metric(mean_risk(0)) + " at shift 0)");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_risk(mid) < spec.overall_rate_target)
      lo = mid;
    else
      hi = mid;
  }
  out.intercept_shift = 0.5 * (lo + hi);

  // pass 3: labels
  int deaths = 0;
  for (int i = 0; i < n; ++i) {
    const double p = sigmoid(logits[i] + out.intercept_shift);
    records[i].label = rng.uniform01() < p ? 1 : 0;
    deaths += records[i].label;
  }
  out.achieved_overall_rate = static_cast<double>(deaths) / n;

  // verify per-stage achieved rates against the declared targets
  const StageSets sets = stage_records(records);
  std::string failure;
  for (int s = 0; s < kNumStages; ++s) {
    const auto& members = sets.members[s];
    out.stage_counts[s] = static_cast<int>(members.size());
    if (members.empty()) {
      out.achieved_stage_rates[s] = 0;
      failure += " stage" + std::to_string(s + 1) + ": empty;";
      continue;
    }
    int d = 0;
    for (int i : members) d += records[i].label;
    out.achieved_stage_rates[s] = static_cast<double>(d) / members.size();
    if (std::abs(out.achieved_stage_rates[s] - spec.stage_rate_targets[s]) >
        spec.stage_rate_tolerance) {
      failure += " stage" + std::to_string(s + 1) + ": " +
                 format_metric(out.achieved_stage_rates[s]) + " vs target " +
                 format_metric(spec.stage_rate_targets[s]) + ";";
    }
  }
  if (!failure.empty())
    throw CalibrationError("synthetic calibration: achieved per-stage death rates out of "
                           "tolerance:" + failure);
  return out;
}

// --- SyntheticSpec key-value persistence ------------------------------------------

std::string SyntheticSpec::to_kv() const {
  std::ostringstream o;
  o << "seed=" << seed << "\n";
  o << "n_patients=" << n_patients << "\n";
  for (int f = 0; f < kNumRecordFeatures; ++f) {
    const auto& d = dists[f];
    const std::string name(kFeatureNames[f]);
    o << "dist." << name << "="
      << (d.kind == FeatureDistribution::Kind::normal ? "normal" : "log_normal") << ","
      << format_exact(d.loc) << "," << format_exact(d.scale) << "," << format_exact(d.severity)
      << "," << format_exact(d.lo) << "," << format_exact(d.hi) << ","
      << format_exact(d.missing_rate) << "\n";
  }
  o << "risk.w0=" << format_exact(risk.w0) << "\n";
  o << "risk.w_age=" << format_exact(risk.w_age) << "\n";
  o << "risk.w_ldh=" << format_exact(risk.w_ldh) << "\n";
  o << "risk.w_b2m=" << format_exact(risk.w_b2m) << "\n";
  o << "risk.w_albumin=" << format_exact(risk.w_albumin) << "\n";
  o << "overall_rate_target=" << format_exact(overall_rate_target) << "\n";
  o << "stage_rate_targets=" << format_exact(stage_rate_targets[0]) << ","
    << format_exact(stage_rate_targets[1]) << "," << format_exact(stage_rate_targets[2]) << "\n";
  o << "stage_rate_tolerance=" << format_exact(stage_rate_tolerance) << "\n";
  return o.str();
}

SyntheticSpec SyntheticSpec::from_kv(const std::string& text) {
  SyntheticSpec s = default_synthetic_spec();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto parse_num = [&](const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ParseError("synthetic spec line " + std::to_string(lineno) + ": bad number '" + v + "'");
    return d;
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("synthetic spec line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") {
      s.seed = std::strtoull(value.c_str(), nullptr, 10);
    } else if (key == "n_patients") {
      s.n_patients = static_cast<int>(parse_num(value));
    } else if (key.rfind("dist.", 0) == 0) {
      const int f = feature_index(key.substr(5));
      if (f < 0)
        throw ParseError("synthetic spec line " + std::to_string(lineno) + ": unknown feature '" +
                         key.substr(5) + "'");
      auto cells = split_line(value);
      if (cells.size() != 7)
        throw ParseError("synthetic spec line " + std::to_string(lineno) +
                         ": expected 7 comma-separated fields");
      FeatureDistribution d;
      if (cells[0] == "normal")
        d.kind = FeatureDistribution::Kind::normal;
      else if (cells[0] == "log_normal")
        d.kind = FeatureDistribution::Kind::log_normal;
      else
        throw ParseError("synthetic spec line " + std::to_string(lineno) +
                         ": unknown distribution kind '" + cells[0] + "'");
      d.loc = parse_num(cells[1]);
      d.scale = parse_num(cells[2]);
      d.severity = parse_num(cells[3]);
      d.lo = parse_num(cells[4]);
      d.hi = parse_num(cells[5]);
      d.missing_rate = parse_num(cells[6]);
      s.dists[f] = d;
    } else if (key == "risk.w0") {
      s.risk.w0 = parse_num(value);
    } else if (key == "risk.w_age") {
      s.risk.w_age = parse_num(value);
    } else if (key == "risk.w_ldh") {
      s.risk.w_ldh = parse_num(value);
    } else if (key == "risk.w_b2m") {
      s.risk.w_b2m = parse_num(value);
    } else if (key == "risk.w_albumin") {
      s.risk.w_albumin = parse_num(value);
    } else if (key == "overall_rate_target") {
      s.overall_rate_target = parse_num(value);
    } else if (key == "stage_rate_targets") {
      auto cells = split_line(value);
      if (cells.size() != 3)
        throw ParseError("synthetic spec line " + std::to_string(lineno) +
                         ": expected 3 stage rate targets");
      for (int i = 0; i < 3; ++i) s.stage_rate_targets[i] = parse_num(cells[i]);
    } else if (key == "stage_rate_tolerance") {
      s.stage_rate_tolerance = parse_num(value);
    } else {
      throw ParseError("synthetic spec line " + std::to_string(lineno) + ": unknown key '" + key +
                       "'");
    }
  }
  return s;
}

}  // namespace mmsurv
