#include "table_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "lmpsh/errors.hpp"
#include "lmpsh/step_function.hpp"

namespace lmpsh::cli {

void DataOptions::add_to(CLI::App& app, bool required) {
  auto* opt = app.add_option("--data", data, "Wide CSV: id,time,status,cause,<covariates>");
  if (required) opt->required();
  app.add_option("--long", long_path, "Long CSV of time-dependent covariates: id,tstart,tstop,<covariates>");
  app.add_option("--covariates", covariates, "Covariate columns (default: every remaining column)")->delimiter(',');
  app.add_option("--id-col", id, "Subject id column")->capture_default_str();
  app.add_option("--time-col", time, "Follow-up time column")->capture_default_str();
  app.add_option("--status-col", status, "Failure indicator column")->capture_default_str();
  app.add_option("--cause-col", cause, "Failure cause column")->capture_default_str();
}

SurvivalDataset DataOptions::load(int event_cause) const {
  CsvSchema schema;
  schema.id = id;
  schema.time = time;
  schema.status = status;
  schema.cause = cause;
  schema.covariates = covariates;
  if (!long_path.empty()) schema.long_path = long_path;
  return relabel_cause(load_csv(data, schema), event_cause);
}

std::vector<std::string> DataOptions::inputs() const {
  std::vector<std::string> out{data};
  if (!long_path.empty()) out.push_back(long_path);
  return out;
}

SurvivalDataset relabel_cause(const SurvivalDataset& ds, int cause) {
  if (cause < 1) throw ConfigError("cause must be a positive label");
  if (cause == 1) return ds;
  std::vector<SubjectRecord> rows(ds.rows().begin(), ds.rows().end());
  for (auto& r : rows) {
    if (r.cause == cause) {
      r.cause = 1;
    } else if (r.cause == 1) {
      r.cause = cause;
    }
  }
  return SurvivalDataset(std::move(rows), ds.covariate_names());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Profiles read_profiles(const std::filesystem::path& path, const std::vector<std::string>& names) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError(path.string() + " is empty");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> col(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = std::find(header.begin(), header.end(), names[j]);
    if (it == header.end()) throw DataError("profile file lacks covariate column '" + names[j] + "'");
    col[j] = static_cast<std::size_t>(it - header.begin());
  }
  for (const auto& h : header) {
    if (h != "profile" && std::find(names.begin(), names.end(), h) == names.end()) {
      throw DataError("profile column '" + h + "' is not a model covariate");
    }
  }
  const auto label_it = std::find(header.begin(), header.end(), "profile");
  Profiles p;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError("wrong column count on line " + std::to_string(lineno));
    std::vector<double> z(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) z[j] = parse_double(cells[col[j]]);
    p.labels.push_back(label_it == header.end() ? std::to_string(p.values.size() + 1)
                                                : cells[static_cast<std::size_t>(label_it - header.begin())]);
    p.values.push_back(std::move(z));
  }
  if (p.values.empty()) throw DataError(path.string() + " has no profiles");
  return p;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace lmpsh::cli
