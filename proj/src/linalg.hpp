#pragma once

#include <cstddef>
#include <span>

namespace keep::detail {

// The simd reduction lets the compiler reorder the sum (vectorised), which
// is fine: the order is fixed for a given build.
inline double dot(std::span<const double> a, std::span<const double> b) {
  const double* x = a.data();
  const double* y = b.data();
  const std::size_t n = a.size();
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

}  // namespace keep::detail
