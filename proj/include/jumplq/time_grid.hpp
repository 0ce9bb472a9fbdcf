#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "jumplq/errors.hpp"

namespace jumplq {

// Piecewise-constant deterministic coefficient on a uniform partition of
// [0, horizon]. A single stored value broadcasts to the whole horizon.
// Lookups use the left value of the containing interval; t = horizon maps to
// the last interval.
template <typename T>
class TimeGridded {
 public:
  TimeGridded() = default;
  explicit TimeGridded(std::vector<T> values) : values_(std::move(values)) {
    if (values_.empty()) throw ArgumentError("time grid: empty value list");
  }
  static TimeGridded constant(T value) {
    TimeGridded g;
    g.values_.push_back(std::move(value));
    return g;
  }

  size_t intervals() const { return values_.size(); }
  const std::vector<T>& values() const { return values_; }

  const T& at_index(size_t k) const { return values_[k < values_.size() ? k : values_.size() - 1]; }

  const T& at_time(double t, double horizon) const {
    if (values_.size() == 1) return values_[0];
    if (!(horizon > 0.0)) throw ArgumentError("time grid: horizon must be positive");
    if (t < 0.0) t = 0.0;
    auto k = static_cast<size_t>(t / horizon * static_cast<double>(values_.size()));
    return at_index(k);
  }

 private:
  std::vector<T> values_;
};

}  // namespace jumplq
