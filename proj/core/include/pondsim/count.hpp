// Copyright 2026 The pondsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PONDSIM_COUNT_HPP_
#define PONDSIM_COUNT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace pondsim {

// A positive edge count that is either held exactly or, once it outgrows
// 2^53, by its natural logarithm. Pond statistics deep in the chain reach
// e^800 and beyond, which no machine integer or double can hold.
class Count {
 public:
  static constexpr std::uint64_t kExactLimit = std::uint64_t{1} << 53;

  Count() = default;

  static Count exact(std::uint64_t value) {
    Count c;
    if (value >= kExactLimit) {
      c.exact_ = false;
      c.log_ = std::log(static_cast<double>(value));
      return c;
    }
    c.exact_ = true;
    c.value_ = value;
    c.log_ = value == 0 ? -INFINITY : std::log(static_cast<double>(value));
    return c;
  }

  static Count from_log(double log_value) {
    if (log_value < std::log(static_cast<double>(kExactLimit))) {
      return exact(static_cast<std::uint64_t>(std::llround(std::exp(log_value))));
    }
    Count c;
    c.exact_ = false;
    c.log_ = log_value;
    return c;
  }

  // Rounds a nonnegative real to the nearest representable count.
  static Count from_real(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("negative count");
    if (value < static_cast<double>(kExactLimit)) {
      return exact(static_cast<std::uint64_t>(std::llround(value)));
    }
    return from_log(std::log(value));
  }

  bool is_exact() const { return exact_; }

  std::uint64_t value() const {
    if (!exact_) throw std::logic_error("count is held only in log form");
    return value_;
  }

  double log() const { return log_; }

  double to_double() const { return exact_ ? static_cast<double>(value_) : std::exp(log_); }

  bool greater_than(double k) const {
    if (exact_) return static_cast<double>(value_) > k;
    return k <= 0.0 || log_ > std::log(k);
  }

  friend Count operator+(const Count& a, const Count& b) {
    if (a.exact_ && b.exact_ && a.value_ < kExactLimit - b.value_) {
      return exact(a.value_ + b.value_);
    }
    const double hi = std::max(a.log_, b.log_);
    const double lo = std::min(a.log_, b.log_);
    return from_log(hi + std::log1p(std::exp(lo - hi)));
  }

  Count& operator+=(const Count& other) { return *this = *this + other; }

  friend bool operator<(const Count& a, const Count& b) {
    if (a.exact_ && b.exact_) return a.value_ < b.value_;
    return a.log_ < b.log_;
  }
  friend bool operator==(const Count& a, const Count& b) {
    if (a.exact_ && b.exact_) return a.value_ == b.value_;
    return a.exact_ == b.exact_ && a.log_ == b.log_;
  }
  friend bool operator<=(const Count& a, const Count& b) { return !(b < a); }

 private:
  bool exact_ = true;
  std::uint64_t value_ = 0;
  double log_ = -INFINITY;
};

inline Count max(const Count& a, const Count& b) { return a < b ? b : a; }

}  // namespace pondsim

#endif  // PONDSIM_COUNT_HPP_
