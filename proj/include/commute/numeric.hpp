#pragma once

#include <cmath>

namespace commute {

/// Neumaier-compensated running sum.
template <class T = double>
class CompensatedSum
{
public:
  void add(T v)
  {
    const T t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(T v)
  {
    add(v);
    return *this;
  }
  T value() const { return sum_ + comp_; }

private:
  T sum_ = 0;
  T comp_ = 0;
};

}  // namespace commute
