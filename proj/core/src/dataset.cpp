#include "lmpsh/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lmpsh/errors.hpp"

namespace lmpsh {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  for (auto& s : out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  }
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= '0' && c <= '9'; });
}

std::string strip_leading_zeros(const std::string& s) {
  const auto pos = s.find_first_not_of('0');
  return pos == std::string::npos ? std::string("0") : s.substr(pos);
}

struct Header {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> index;

  explicit Header(std::vector<std::string> cols) : names(std::move(cols)) {
    for (std::size_t j = 0; j < names.size(); ++j) index.emplace(names[j], j);
  }
  std::size_t require(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) throw DataError("missing column '" + name + "'");
    return it->second;
  }
};

double cell_number(const std::vector<std::string>& cells, std::size_t col, std::size_t row,
                   const std::string& colname) {
  try {
    return parse_double(cells[col]);
  } catch (const DataError&) {
    throw DataError("non-numeric value '" + cells[col] + "' at row " + std::to_string(row) + " column '" +
                    colname + "'");
  }
}

int cell_integer(const std::vector<std::string>& cells, std::size_t col, std::size_t row,
                 const std::string& colname) {
  const double v = cell_number(cells, col, row, colname);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw DataError("non-integer value '" + cells[col] + "' at row " + std::to_string(row) + " column '" +
                    colname + "'");
  }
  return static_cast<int>(v);
}

void validate_record(const SubjectRecord& r, std::size_t p) {
  const std::string who = "subject '" + r.id + "'";
  if (!std::isfinite(r.time) || r.time <= 0.0) throw DataError("nonpositive or non-finite time for " + who);
  if (r.status != 0 && r.status != 1) throw DataError("status must be 0 or 1 for " + who);
  if ((r.status == 1) != (r.cause >= 1) || r.cause < 0) {
    throw DataError("status/cause inconsistency for " + who);
  }
  if (r.covariates.size() != p) throw DataError("covariate vector length mismatch for " + who);
  for (double v : r.covariates) {
    if (!std::isfinite(v)) throw DataError("non-finite covariate for " + who);
  }
  if (r.segments.empty()) return;
  if (r.segments.front().start != 0.0) throw DataError("covariate intervals for id '" + r.id + "' do not start at 0");
  for (std::size_t k = 0; k < r.segments.size(); ++k) {
    const auto& seg = r.segments[k];
    if (!(seg.start < seg.stop)) throw DataError("empty covariate interval for id '" + r.id + "'");
    if (seg.values.size() != p) throw DataError("covariate vector length mismatch for " + who);
    if (k > 0) {
      const double prev_stop = r.segments[k - 1].stop;
      if (seg.start < prev_stop) throw DataError("overlapping covariate intervals for id '" + r.id + "'");
      if (seg.start > prev_stop) throw DataError("gap in covariate intervals for id '" + r.id + "'");
    }
  }
  if (r.segments.back().stop < r.time) {
    throw DataError("covariate intervals for id '" + r.id + "' end before the follow-up time");
  }
}

}  // namespace

bool id_less(const std::string& a, const std::string& b) {
  const bool da = all_digits(a), db = all_digits(b);
  if (da && db) {
    const std::string sa = strip_leading_zeros(a), sb = strip_leading_zeros(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  if (da != db) return da;
  return a < b;
}

std::span<const double> SubjectRecord::covariates_at(double t) const {
  if (segments.empty()) return covariates;
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const CovariateSegment& s) { return v < s.start; });
  if (it == segments.begin()) return segments.front().values;
  return std::prev(it)->values;
}

std::vector<double> SubjectRecord::change_times(double after, double until) const {
  std::vector<double> out;
  for (std::size_t k = 1; k < segments.size(); ++k) {
    const double c = segments[k].start;
    if (c > after && c < until && segments[k].values != segments[k - 1].values) out.push_back(c);
  }
  return out;
}

SurvivalDataset::SurvivalDataset(std::vector<SubjectRecord> rows, std::vector<std::string> covariate_names)
    : rows_(std::move(rows)), covariate_names_(std::move(covariate_names)) {
  const std::size_t p = covariate_names_.size();
  std::unordered_set<std::string> seen;
  for (auto& r : rows_) {
    validate_record(r, p);
    if (!seen.insert(r.id).second) throw DataError("duplicate subject id '" + r.id + "'");
  }
  std::stable_sort(rows_.begin(), rows_.end(),
                   [](const SubjectRecord& a, const SubjectRecord& b) { return id_less(a.id, b.id); });
}

std::vector<int> SurvivalDataset::causes() const {
  std::set<int> c;
  for (const auto& r : rows_) {
    if (r.status == 1) c.insert(r.cause);
  }
  return {c.begin(), c.end()};
}

int SurvivalDataset::num_causes() const {
  const auto c = causes();
  return c.empty() ? 0 : c.back();
}

double SurvivalDataset::max_time() const {
  double m = 0.0;
  for (const auto& r : rows_) m = std::max(m, r.time);
  return m;
}

bool SurvivalDataset::has_time_dependent() const {
  return std::any_of(rows_.begin(), rows_.end(), [](const SubjectRecord& r) { return r.time_dependent(); });
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> indices) const {
  SurvivalDataset out;
  out.covariate_names_ = covariate_names_;
  out.rows_.reserve(indices.size());
  for (std::size_t i : indices) out.rows_.push_back(rows_.at(i));
  return out;
}

SurvivalDataset read_csv(std::istream& wide, const CsvSchema& schema, std::istream* long_format) {
  std::string line;
  if (!std::getline(wide, line)) throw DataError("empty CSV file");
  const Header header(split_csv_line(line));
  const std::size_t c_id = header.require(schema.id);
  const std::size_t c_time = header.require(schema.time);
  const std::size_t c_status = header.require(schema.status);
  const std::size_t c_cause = header.require(schema.cause);

  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (const auto& name : header.names) {
      if (name != schema.id && name != schema.time && name != schema.status && name != schema.cause) {
        cov_names.push_back(name);
      }
    }
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : cov_names) cov_cols.push_back(header.require(name));

  std::vector<SubjectRecord> rows;
  std::size_t rowno = 0;
  while (std::getline(wide, line)) {
    if (line.empty() || line == "\r") continue;
    ++rowno;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.names.size()) {
      throw DataError("row " + std::to_string(rowno) + " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.names.size()));
    }
    SubjectRecord r;
    r.id = cells[c_id];
    r.time = cell_number(cells, c_time, rowno, schema.time);
    if (!std::isfinite(r.time) || r.time <= 0.0) throw DataError("nonpositive time at row " + std::to_string(rowno));
    r.status = cell_integer(cells, c_status, rowno, schema.status);
    r.cause = cell_integer(cells, c_cause, rowno, schema.cause);
    if ((r.status != 0 && r.status != 1) || (r.status == 1) != (r.cause >= 1) || r.cause < 0) {
      throw DataError("status/cause inconsistency at row " + std::to_string(rowno));
    }
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      r.covariates.push_back(cell_number(cells, cov_cols[j], rowno, cov_names[j]));
    }
    rows.push_back(std::move(r));
  }

  if (long_format != nullptr) {
    if (!std::getline(*long_format, line)) throw DataError("empty long-format CSV file");
    const Header lh(split_csv_line(line));
    const std::size_t l_id = lh.require(schema.id);
    const std::size_t l_start = lh.require("tstart");
    const std::size_t l_stop = lh.require("tstop");
    std::vector<std::size_t> td_cols;
    for (std::size_t j = 0; j < lh.names.size(); ++j) {
      if (j != l_id && j != l_start && j != l_stop) {
        td_cols.push_back(j);
        cov_names.push_back(lh.names[j]);
      }
    }
    std::map<std::string, std::vector<CovariateSegment>> by_id;
    std::size_t lrow = 0;
    while (std::getline(*long_format, line)) {
      if (line.empty() || line == "\r") continue;
      ++lrow;
      const auto cells = split_csv_line(line);
      if (cells.size() != lh.names.size()) {
        throw DataError("long-format row " + std::to_string(lrow) + " has wrong number of cells");
      }
      CovariateSegment seg;
      seg.start = cell_number(cells, l_start, lrow, "tstart");
      seg.stop = cell_number(cells, l_stop, lrow, "tstop");
      for (std::size_t j : td_cols) seg.values.push_back(cell_number(cells, j, lrow, lh.names[j]));
      by_id[cells[l_id]].push_back(std::move(seg));
    }
    for (auto& r : rows) {
      auto it = by_id.find(r.id);
      if (it == by_id.end()) throw DataError("id '" + r.id + "' has no long-format covariate rows");
      auto segs = std::move(it->second);
      by_id.erase(it);
      std::sort(segs.begin(), segs.end(),
                [](const CovariateSegment& a, const CovariateSegment& b) { return a.start < b.start; });
      for (std::size_t k = 1; k < segs.size(); ++k) {
        if (segs[k].start < segs[k - 1].stop) throw DataError("overlapping covariate intervals for id '" + r.id + "'");
        if (segs[k].start > segs[k - 1].stop) throw DataError("gap in covariate intervals for id '" + r.id + "'");
      }
      if (segs.front().start != 0.0) throw DataError("covariate intervals for id '" + r.id + "' do not start at 0");
      if (segs.back().stop < r.time) {
        throw DataError("covariate intervals for id '" + r.id + "' end before the follow-up time");
      }
      while (segs.size() > 1 && segs.back().start >= r.time) segs.pop_back();
      segs.back().stop = r.time;
      for (auto& seg : segs) seg.values.insert(seg.values.begin(), r.covariates.begin(), r.covariates.end());
      r.covariates = segs.front().values;
      if (segs.size() > 1) r.segments = std::move(segs);
    }
    if (!by_id.empty()) throw DataError("long-format id '" + by_id.begin()->first + "' not present in the wide file");
  }
  return SurvivalDataset(std::move(rows), std::move(cov_names));
}

SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  if (schema.long_path) {
    std::ifstream lin(*schema.long_path);
    if (!lin) throw DataError("cannot open '" + schema.long_path->string() + "'");
    return read_csv(in, schema, &lin);
  }
  return read_csv(in, schema, nullptr);
}

namespace {

std::vector<bool> varying_columns(const SurvivalDataset& ds) {
  std::vector<bool> varying(ds.num_covariates(), false);
  for (const auto& r : ds.rows()) {
    for (std::size_t k = 1; k < r.segments.size(); ++k) {
      for (std::size_t j = 0; j < varying.size(); ++j) {
        if (r.segments[k].values[j] != r.segments[0].values[j]) varying[j] = true;
      }
    }
  }
  return varying;
}

}  // namespace

void write_csv(std::ostream& os, const SurvivalDataset& ds) {
  const auto varying = varying_columns(ds);
  os << "id,time,status,cause";
  for (std::size_t j = 0; j < ds.num_covariates(); ++j) {
    if (!varying[j]) os << ',' << ds.covariate_names()[j];
  }
  os << '\n';
  for (const auto& r : ds.rows()) {
    os << r.id << ',' << format_double(r.time) << ',' << r.status << ',' << r.cause;
    for (std::size_t j = 0; j < r.covariates.size(); ++j) {
      if (!varying[j]) os << ',' << format_double(r.covariates[j]);
    }
    os << '\n';
  }
}

void write_long_csv(std::ostream& os, const SurvivalDataset& ds) {
  const auto varying = varying_columns(ds);
  os << "id,tstart,tstop";
  for (std::size_t j = 0; j < ds.num_covariates(); ++j) {
    if (varying[j]) os << ',' << ds.covariate_names()[j];
  }
  os << '\n';
  for (const auto& r : ds.rows()) {
    auto emit = [&](double a, double b, std::span<const double> v) {
      os << r.id << ',' << format_double(a) << ',' << format_double(b);
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (varying[j]) os << ',' << format_double(v[j]);
      }
      os << '\n';
    };
    if (r.segments.empty()) {
      emit(0.0, r.time, r.covariates);
    } else {
      for (const auto& seg : r.segments) emit(seg.start, seg.stop, seg.values);
    }
  }
}

// ---------------------------------------------------------------------------
// CountingProcessTable

int CountingProcessTable::num_strata() const {
  int m = 0;
  for (int s : stratum) m = std::max(m, s + 1);
  return rows() == 0 ? 0 : m;
}

std::size_t CountingProcessTable::num_events() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), 1));
}

void CountingProcessTable::reserve(std::size_t n) {
  cluster.reserve(n);
  start.reserve(n);
  stop.reserve(n);
  status.reserve(n);
  weight.reserve(n);
  stratum.reserve(n);
  landmark.reserve(n);
  z.reserve(n * cols());
}

void CountingProcessTable::push_row(std::size_t cluster_index, double start_time, double stop_time, int event,
                                    double w, std::span<const double> covariates, int stratum_id,
                                    double landmark_time) {
  cluster.push_back(cluster_index);
  start.push_back(start_time);
  stop.push_back(stop_time);
  status.push_back(event);
  weight.push_back(w);
  stratum.push_back(stratum_id);
  landmark.push_back(landmark_time);
  z.insert(z.end(), covariates.begin(), covariates.end());
}

void CountingProcessTable::append(const CountingProcessTable& other) {
  if (rows() == 0 && cluster_ids.empty()) covariate_names = other.covariate_names;
  if (other.covariate_names != covariate_names) throw DataError("cannot append tables with different covariates");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < cluster_ids.size(); ++c) index.emplace(cluster_ids[c], c);
  std::vector<std::size_t> remap(other.cluster_ids.size());
  for (std::size_t c = 0; c < other.cluster_ids.size(); ++c) {
    auto [it, inserted] = index.emplace(other.cluster_ids[c], cluster_ids.size());
    if (inserted) cluster_ids.push_back(other.cluster_ids[c]);
    remap[c] = it->second;
  }
  reserve(rows() + other.rows());
  for (std::size_t r = 0; r < other.rows(); ++r) {
    push_row(remap[other.cluster[r]], other.start[r], other.stop[r], other.status[r], other.weight[r], other.row(r),
             other.stratum[r], other.landmark[r]);
  }
}

void CountingProcessTable::validate() const {
  const std::size_t n = rows();
  if (stop.size() != n || status.size() != n || weight.size() != n || cluster.size() != n || stratum.size() != n ||
      landmark.size() != n || z.size() != n * cols()) {
    throw DataError("counting-process table columns have inconsistent lengths");
  }
  std::vector<std::vector<std::size_t>> by_key(cluster_ids.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (!(start[r] < stop[r])) throw DataError("counting-process row " + std::to_string(r) + " has start >= stop");
    if (!(weight[r] > 0.0 && weight[r] <= 1.0)) {
      throw DataError("counting-process row " + std::to_string(r) + " has weight outside (0,1]");
    }
    if (cluster[r] >= cluster_ids.size()) throw DataError("counting-process row has unknown cluster");
    by_key[cluster[r]].push_back(r);
  }
  // Within a cluster, rows of the same landmark/stratum must be disjoint and ordered.
  for (const auto& rows_of : by_key) {
    for (std::size_t k = 1; k < rows_of.size(); ++k) {
      const std::size_t a = rows_of[k - 1], b = rows_of[k];
      if (landmark[a] == landmark[b] && stratum[a] == stratum[b] && start[b] < stop[a]) {
        throw DataError("counting-process intervals overlap for subject '" + cluster_ids[cluster[a]] + "'");
      }
    }
  }
}

void write_counting_process_csv(std::ostream& os, const CountingProcessTable& cp) {
  const bool tags = std::any_of(cp.stratum.begin(), cp.stratum.end(), [](int s) { return s != 0; }) ||
                    std::any_of(cp.landmark.begin(), cp.landmark.end(), [](double s) { return s != 0.0; });
  os << "id,start,stop,status1,weight";
  for (const auto& name : cp.covariate_names) os << ',' << name;
  if (tags) os << ",.stratum,.landmark";
  os << '\n';
  for (std::size_t r = 0; r < cp.rows(); ++r) {
    os << cp.cluster_ids[cp.cluster[r]] << ',' << format_double(cp.start[r]) << ',' << format_double(cp.stop[r]) << ','
       << cp.status[r] << ',' << format_double(cp.weight[r]);
    for (double v : cp.row(r)) os << ',' << format_double(v);
    if (tags) os << ',' << cp.stratum[r] << ',' << format_double(cp.landmark[r]);
    os << '\n';
  }
}

CountingProcessTable read_counting_process_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty counting-process CSV");
  auto cols = split_csv_line(line);
  if (cols.size() < 5 || cols[0] != "id" || cols[1] != "start" || cols[2] != "stop" || cols[3] != "status1" ||
      cols[4] != "weight") {
    throw DataError("counting-process CSV: header must begin with id,start,stop,status1,weight");
  }
  const bool tags = cols.size() >= 7 && cols[cols.size() - 2] == ".stratum" && cols.back() == ".landmark";
  CountingProcessTable cp;
  cp.covariate_names.assign(cols.begin() + 5, cols.end() - (tags ? 2 : 0));
  const std::size_t p = cp.covariate_names.size();
  std::unordered_map<std::string, std::size_t> index;
  std::vector<double> zrow(p);
  std::size_t rowno = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++rowno;
    const auto cells = split_csv_line(line);
    if (cells.size() != cols.size()) throw DataError("counting-process CSV: row " + std::to_string(rowno) + " malformed");
    auto [it, inserted] = index.emplace(cells[0], cp.cluster_ids.size());
    if (inserted) cp.cluster_ids.push_back(cells[0]);
    for (std::size_t j = 0; j < p; ++j) zrow[j] = cell_number(cells, 5 + j, rowno, cp.covariate_names[j]);
    const int stratum = tags ? cell_integer(cells, cells.size() - 2, rowno, ".stratum") : 0;
    const double lm = tags ? cell_number(cells, cells.size() - 1, rowno, ".landmark") : 0.0;
    cp.push_row(it->second, cell_number(cells, 1, rowno, "start"), cell_number(cells, 2, rowno, "stop"),
                cell_integer(cells, 3, rowno, "status1"), cell_number(cells, 4, rowno, "weight"), zrow, stratum, lm);
  }
  return cp;
}

CountingProcessResult to_counting_process(const SurvivalDataset& ds, const StepFunction& censoring_survival,
                                          const CountingProcessOptions& options) {
  const StepFunction& G = censoring_survival;
  if (!G.is_nonincreasing()) throw DataError("censoring survival function is not nonincreasing");
  CountingProcessResult result;
  CountingProcessTable& cp = result.table;
  cp.covariate_names = ds.covariate_names();
  cp.reserve(ds.size());
  const double tau = ds.max_time();
  const auto jumps = G.times();
  const double entry = options.entry;

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SubjectRecord& rec = ds[i];
    if (!(rec.time > entry)) {
      throw DataError("subject '" + rec.id + "' is not at risk after the entry time " + format_double(entry));
    }
    const std::size_t cl = cp.cluster_ids.size();
    cp.cluster_ids.push_back(rec.id);
    const bool event = rec.status == 1 && rec.cause == options.cause;
    const bool competing = rec.status == 1 && rec.cause != options.cause;

    double a = entry;
    for (double c : rec.change_times(entry, rec.time)) {
      cp.push_row(cl, a, c, 0, 1.0, rec.covariates_at(a), 0, entry);
      a = c;
    }
    cp.push_row(cl, a, rec.time, event ? 1 : 0, 1.0, rec.covariates_at(a), 0, entry);

    if (!competing || options.competing_as_censoring || !(rec.time < tau)) continue;

    const double denom = G.at_minus(rec.time);
    if (!(denom > 0.0)) {
      ++result.truncated;
      continue;
    }
    const auto z_last = rec.covariates_at(rec.time);
    std::size_t idx = static_cast<std::size_t>(std::lower_bound(jumps.begin(), jumps.end(), rec.time) - jumps.begin());
    a = rec.time;
    while (a < tau) {
      while (idx < jumps.size() && jumps[idx] <= a) ++idx;
      const double next = (idx < jumps.size() && jumps[idx] < tau) ? jumps[idx] : tau;
      const double w = std::min(1.0, G(a) / denom);
      if (!(w > 0.0)) {
        ++result.truncated;
        break;
      }
      const std::size_t last = cp.rows() - 1;
      const bool same = cp.cluster[last] == cl && cp.stop[last] == a && cp.status[last] == 0 &&
                        cp.weight[last] == w && std::equal(z_last.begin(), z_last.end(), cp.row(last).begin());
      if (same) {
        cp.stop[last] = next;
      } else {
        cp.push_row(cl, a, next, 0, w, z_last, 0, entry);
      }
      a = next;
    }
  }
  return result;
}

}  // namespace lmpsh
