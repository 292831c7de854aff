#include "lmpsh/step_function.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "lmpsh/errors.hpp"

namespace lmpsh {

StepFunction::StepFunction(double initial, std::vector<double> times, std::vector<double> values)
    : initial_(initial), times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) {
    throw DataError("step function: times and values differ in length");
  }
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!std::isfinite(times_[j]) || times_[j] <= 0.0) {
      throw DataError("step function: jump times must be positive and finite");
    }
    if (j > 0 && !(times_[j] > times_[j - 1])) {
      throw DataError("step function: jump times must be strictly increasing");
    }
  }
}

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::at_minus(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

bool StepFunction::is_nonincreasing() const noexcept {
  double prev = initial_;
  for (double v : values_) {
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

bool StepFunction::is_nondecreasing() const noexcept {
  double prev = initial_;
  for (double v : values_) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

void StepFunction::write_csv(std::ostream& os) const {
  os << "t,value\n";
  os << "0," << format_double(initial_) << '\n';
  for (std::size_t j = 0; j < times_.size(); ++j) {
    os << format_double(times_[j]) << ',' << format_double(values_[j]) << '\n';
  }
}

StepFunction StepFunction::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,value", 0) != 0) {
    throw DataError("step function CSV: missing 't,value' header");
  }
  double initial = 0.0;
  bool have_initial = false;
  std::vector<double> times, values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("step function CSV: malformed row '" + line + "'");
    const double t = parse_double(std::string_view(line).substr(0, comma));
    const double v = parse_double(std::string_view(line).substr(comma + 1));
    if (!have_initial) {
      if (t != 0.0) throw DataError("step function CSV: first row must be t=0");
      initial = v;
      have_initial = true;
    } else {
      times.push_back(t);
      values.push_back(v);
    }
  }
  if (!have_initial) throw DataError("step function CSV: no rows");
  try {
    return StepFunction(initial, std::move(times), std::move(values));
  } catch (const DataError& e) {
    throw DataError(std::string("step function CSV: ") + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (token == "inf" || token == "Inf") return INFINITY;
  if (token == "-inf" || token == "-Inf") return -INFINITY;
  if (token == "nan" || token == "NaN" || token == "NA") return NAN;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw DataError("non-numeric value '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace lmpsh
