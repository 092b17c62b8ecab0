#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace posekit {

// Compensated (Kahan) accumulator. Loss reductions use this so per-point sums
// are reproducible to well below test tolerances regardless of term count.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

inline double relative_error(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-300});
  return std::abs(got - want) / denom;
}

}  // namespace posekit
