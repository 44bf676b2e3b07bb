#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace photonfilter::detail {

// Neumaier-compensated accumulator for long probability sums.
class StableSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Round-trip-safe decimal formatting; all CSV output goes through this so
// identical runs produce identical bytes.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace photonfilter::detail
