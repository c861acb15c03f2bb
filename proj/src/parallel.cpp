#include "calib/parallel.hpp"

#include <cstdlib>
#include <string>

#include "calib/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace calib {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int threads) noexcept {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw CalibError(ErrorCode::InvalidArgument, "--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("CALIB_CI_THREADS"); env && *env) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    throw CalibError(ErrorCode::InvalidArgument,
                     std::string("CALIB_CI_THREADS is not a positive integer: ") + env);
  }
  return max_threads();
}

}  // namespace calib
