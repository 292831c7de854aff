#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmpsh/step_function.hpp"

namespace lmpsh {

/// Covariate values holding on [start, stop).
struct CovariateSegment {
  double start = 0.0;
  double stop = 0.0;
  std::vector<double> values;
};

struct SubjectRecord {
  std::string id;
  double time = 0.0;  // observed follow-up X = min(T, C)
  int status = 0;     // 1 if a failure of any cause was observed
  int cause = 0;      // failure cause in 1..k, 0 when censored
  std::vector<double> covariates;         // Z(0); the full vector for time-fixed data
  std::vector<CovariateSegment> segments;  // empty for time-fixed covariates
  bool administrative = false;            // censored at a prediction horizon, not at random

  bool time_dependent() const noexcept { return !segments.empty(); }
  /// Z(t). Beyond the last segment the last value is carried forward.
  std::span<const double> covariates_at(double t) const;
  /// Times in (after, until) where Z changes.
  std::vector<double> change_times(double after, double until) const;
};

class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  /// Validates every record and sorts rows by id (numeric ids compare numerically).
  SurvivalDataset(std::vector<SubjectRecord> rows, std::vector<std::string> covariate_names);

  std::span<const SubjectRecord> rows() const noexcept { return rows_; }
  const SubjectRecord& operator[](std::size_t i) const { return rows_[i]; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t num_covariates() const noexcept { return covariate_names_.size(); }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

  /// Distinct failure causes present, ascending.
  std::vector<int> causes() const;
  int num_causes() const;
  double max_time() const;
  bool has_time_dependent() const;

  /// Rows whose indices are listed, in the given order (ids must stay unique).
  SurvivalDataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<SubjectRecord> rows_;
  std::vector<std::string> covariate_names_;
};

/// Natural order for subject ids: integers numerically, otherwise lexically.
bool id_less(const std::string& a, const std::string& b);

struct CsvSchema {
  std::string id = "id";
  std::string time = "time";
  std::string status = "status";
  std::string cause = "cause";
  /// Empty means every remaining column of the wide file.
  std::vector<std::string> covariates;
  /// Long-format time-dependent covariates: id,tstart,tstop,<covariates...>.
  std::optional<std::filesystem::path> long_path;
};

SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
SurvivalDataset read_csv(std::istream& wide, const CsvSchema& schema = {}, std::istream* long_format = nullptr);
/// Wide format; time-dependent covariates are written as their Z(0) value.
void write_csv(std::ostream& os, const SurvivalDataset& ds);
/// Long format for subjects with time-dependent covariates.
void write_long_csv(std::ostream& os, const SurvivalDataset& ds);

/// IPCW-weighted delayed-entry risk intervals (start, stop].
struct CountingProcessTable {
  std::vector<std::string> covariate_names;
  std::vector<std::string> cluster_ids;  // cluster index -> subject id

  std::vector<std::size_t> cluster;
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<int> status;  // 1 for an event of interest at `stop`
  std::vector<double> weight;
  std::vector<int> stratum;
  std::vector<double> landmark;
  std::vector<double> z;  // row-major, covariate_names.size() columns

  std::size_t rows() const noexcept { return start.size(); }
  std::size_t cols() const noexcept { return covariate_names.size(); }
  std::span<const double> row(std::size_t r) const { return {z.data() + r * cols(), cols()}; }
  int num_strata() const;
  std::size_t num_events() const;

  void reserve(std::size_t n);
  void push_row(std::size_t cluster_index, double start, double stop, int status, double weight,
                std::span<const double> covariates, int stratum = 0, double landmark = 0.0);
  /// Appends `other`, remapping its clusters by id into this table's cluster list.
  void append(const CountingProcessTable& other);
  /// Checks start < stop, 0 < weight <= 1 and ordered disjoint intervals per cluster.
  void validate() const;

  friend bool operator==(const CountingProcessTable&, const CountingProcessTable&) = default;
};

/// id,start,stop,status1,weight,<covariates>[,.stratum,.landmark]
void write_counting_process_csv(std::ostream& os, const CountingProcessTable& cp);
CountingProcessTable read_counting_process_csv(std::istream& is);

struct CountingProcessOptions {
  double entry = 0.0;  // delayed entry (landmark) time; every subject must have time > entry
  int cause = 1;       // event of interest
  /// Cox-type encoding: competing events close the interval at their own time.
  bool competing_as_censoring = false;
};

struct CountingProcessResult {
  CountingProcessTable table;
  std::size_t truncated = 0;  // competing-event subjects cut where G reached 0
};

/// Fine-Gray counting-process encoding with time-varying IPCW weights for subjects
/// failing from a competing cause: after T_i they stay at risk up to the largest
/// observed time with weight G(t-)/G(T_i-), piecewise constant between censoring jumps.
CountingProcessResult to_counting_process(const SurvivalDataset& ds, const StepFunction& censoring_survival,
                                          const CountingProcessOptions& options = {});

}  // namespace lmpsh
