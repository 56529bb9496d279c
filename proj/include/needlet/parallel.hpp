#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace needlet::parallel {

#if defined(_OPENMP)
inline int max_threads() { return omp_get_max_threads(); }
inline void set_threads(int n) { omp_set_num_threads(n > 0 ? n : 1); }
inline bool enabled() { return true; }
#else
inline int max_threads() { return 1; }
inline void set_threads(int) {}
inline bool enabled() { return false; }
#endif

}  // namespace needlet::parallel
