#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmpsh {

/// Right-continuous piecewise-constant function on [0, inf).
///
/// Takes `initial()` on [0, t_0), and `values()[j]` on [t_j, t_{j+1}).
/// Used for the censoring survival G, baseline cumulative hazards and CIFs.
class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double initial) : initial_(initial) {}
  /// Jump times must be strictly increasing, positive and finite.
  StepFunction(double initial, std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  /// Left limit, i.e. the value just before t.
  double at_minus(double t) const;

  double initial() const noexcept { return initial_; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  double last_value() const noexcept { return times_.empty() ? initial_ : values_.back(); }

  bool is_nonincreasing() const noexcept;
  bool is_nondecreasing() const noexcept;

  /// `t,value` rows; the first data row is (0, initial).
  void write_csv(std::ostream& os) const;
  static StepFunction read_csv(std::istream& is);

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
/// Strict parse of a full token; throws DataError on garbage.
double parse_double(std::string_view token);

}  // namespace lmpsh
