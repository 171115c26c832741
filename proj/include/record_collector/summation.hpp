#pragma once

#include <cmath>

namespace record_collector {

/// Neumaier compensated summation in long double.
///
/// Keeps a running correction term so that long alternating or
/// wide-dynamic-range sums lose at most a few ulps of the accumulator type.
class compensated_sum {
 public:
  using value_type = long double;

  constexpr compensated_sum() = default;
  constexpr explicit compensated_sum(value_type init) : sum_(init) {}

  constexpr void add(value_type x) {
    const value_type t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  constexpr compensated_sum& operator+=(value_type x) {
    add(x);
    return *this;
  }

  constexpr compensated_sum& operator+=(const compensated_sum& other) {
    add(other.sum_);
    add(other.comp_);
    return *this;
  }

  constexpr value_type value() const { return sum_ + comp_; }

 private:
  value_type sum_ = 0;
  value_type comp_ = 0;
};

}  // namespace record_collector
