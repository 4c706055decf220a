#pragma once

#include <omp.h>

namespace keep {

// 0 means "whatever OpenMP would use".
inline int resolve_threads(int requested) {
  return requested > 0 ? requested : omp_get_max_threads();
}

}  // namespace keep
