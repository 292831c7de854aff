#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lmpsh/simulate.hpp"
#include "lmpsh/supermodel.hpp"

namespace lmpsh {

struct Budget {
  int reps = 200;
  std::size_t n = 1000;
  std::uint64_t seed = 20240601;
  unsigned jobs = 1;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

void write_checks(std::ostream& os, const std::vector<CheckResult>& checks);

/// One simulation scenario of the conditional-CIF comparison: generator, window,
/// evaluation landmarks and supermodel grid.
struct Scenario {
  int setting = 1;  // 1 or 2
  Setting1Params setting1;
  Setting2Params setting2;
  double w = 3.0;
  std::vector<double> landmarks;
  std::vector<double> grid;
  double censoring_fraction = 0.25;

  SurvivalDataset simulate(std::size_t n, std::uint64_t seed) const;
  double truth(double z, double s) const;
};

/// Defaults of the two non-PSH scenarios: setting 1 with w = 3 on landmarks 0:0.5:5,
/// setting 2 with w = 2 on 0:0.5:4; supermodel grids with step 0.1. The censoring
/// bound is calibrated to the target fraction.
Scenario default_scenario(int setting, double censoring_fraction = 0.25);

/// Mean predicted conditional CIF per method, arm and landmark.
struct CurveStudy {
  Scenario scenario;
  std::vector<std::string> methods;  // "NP", "PSH", "LM-PSH", "LM-PSH-Super", "LM-Cox-Super"
  std::vector<double> arms{0.0, 1.0};
  std::vector<std::vector<double>> truth;                    // [arm][landmark]
  std::vector<std::vector<std::vector<double>>> mean, sd;    // [method][arm][landmark]
  std::vector<int> failures;                                 // replications lost per method
  int reps = 0;

  std::size_t method_index(const std::string& name) const;
};

CurveStudy run_curve_study(const Scenario& scenario, const Budget& budget);
/// setting,method,z,s,mean,sd,truth,reps,failures
void write_curve_csv(std::ostream& os, const std::vector<CurveStudy>& studies);
std::string curve_svg(const std::vector<CurveStudy>& studies);
/// Landmark PSH and supermodel within `tolerance` of the truth everywhere; the Cox
/// supermodel above the truth by more than `tolerance` (in either arm) at half the
/// landmarks or more.
std::vector<CheckResult> curve_checks(const CurveStudy& study, double tolerance = 0.02);

/// Relative increment (BS_model - BS_NP) / BS_NP of the cross-validated Brier score.
struct IncrementStudy {
  Scenario scenario;
  std::vector<std::string> methods;  // "PSH", "LM-PSH", "LM-PSH-Super"
  std::vector<std::vector<double>> mean, sd;  // [method][landmark]
  std::vector<double> brier_np;                // mean NP Brier per landmark
  std::vector<int> failures;
  int reps = 0;
  int folds = 3;
};

IncrementStudy run_increment_study(const Scenario& scenario, const Budget& budget, int folds = 3);
/// setting,method,s,mean,sd,brier_np,reps,failures
void write_increment_csv(std::ostream& os, const std::vector<IncrementStudy>& studies);
std::string increment_svg(const std::vector<IncrementStudy>& studies);
/// |increment| of the landmark PSH model <= band at every landmark; on the upper half
/// of the landmarks the standard PSH increment averages above zero and above the
/// landmark PSH average.
std::vector<CheckResult> increment_checks(const IncrementStudy& study, double band = 0.05);

/// Cross-validated O/E, Brier and AUC of the PSH and Cox supermodels on the
/// time-dependent covariate generator.
struct CalibrationScenario {
  TdCovParams params;
  double w = 0.4;
  std::vector<double> landmarks;
  std::vector<double> grid;
  double censoring_fraction = 0.3;
  int folds = 3;
};

CalibrationScenario default_calibration_scenario(double censoring_fraction = 0.3);

struct MetricSummary {
  std::vector<double> oe_mean, oe_sd, brier_mean, brier_sd, auc_mean, auc_sd;  // per landmark
};

struct CalibrationStudy {
  CalibrationScenario scenario;
  std::vector<std::string> methods;  // "LM-PSH-Super", "LM-Cox-Super"
  std::vector<MetricSummary> summary;
  std::vector<int> failures;
  int reps = 0;
};

CalibrationStudy run_calibration_study(const CalibrationScenario& scenario, const Budget& budget);
/// method,landmark,metric,estimate,se with replication SDs in the se column.
void write_calibration_csv(std::ostream& os, const CalibrationStudy& study);
/// Fixed-width table with entries multiplied by 100.
void write_calibration_table(std::ostream& os, const CalibrationStudy& study);
/// Supermodel mean O/E within [lo, hi] and AUC above auc_floor at every landmark, and
/// closer to 1 than the Cox supermodel's mean O/E at every landmark.
std::vector<CheckResult> calibration_checks(const CalibrationStudy& study, double lo = 0.85, double hi = 1.15,
                                            double auc_floor = 0.6);

}  // namespace lmpsh
