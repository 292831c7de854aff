#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmpsh/dataset.hpp"

namespace lmpsh::cli {

/// Input dataset flags shared by fit, predict and evaluate.
struct DataOptions {
  std::string data;
  std::string long_path;
  std::vector<std::string> covariates;
  std::string id = "id";
  std::string time = "time";
  std::string status = "status";
  std::string cause = "cause";

  void add_to(CLI::App& app, bool required = true);
  /// Loads the data and relabels `event_cause` as cause 1.
  SurvivalDataset load(int event_cause = 1) const;
  std::vector<std::string> inputs() const;
};

/// Swaps the labels 1 and `cause`, so the event of interest is always cause 1.
SurvivalDataset relabel_cause(const SurvivalDataset& ds, int cause);

/// Covariate profiles: an optional "profile" label column plus one column per covariate.
struct Profiles {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // ordered like the requested names
};

Profiles read_profiles(const std::filesystem::path& path, const std::vector<std::string>& names);

std::ofstream open_output(const std::filesystem::path& path);

/// Linear-interpolation sample quantile of unsorted data.
double quantile(std::vector<double> x, double p);

/// Thread count for --jobs: 0 means all hardware threads.
unsigned resolve_jobs(unsigned jobs);

}  // namespace lmpsh::cli
