#include "ibug/parallel.hpp"

#include <cstdlib>
#include <string>

#include "ibug/error.hpp"

namespace ibug {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int apply_thread_env() {
  if (const char* v = std::getenv(kThreadEnvVar); v != nullptr && *v != '\0') {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw InvalidInput(std::string(kThreadEnvVar) + " must be a positive integer");
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
  }
  return max_threads();
}

ScopedThreads::ScopedThreads(int n) : previous_(max_threads()) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

ScopedThreads::~ScopedThreads() {
#ifdef _OPENMP
  omp_set_num_threads(previous_);
#endif
}

}  // namespace ibug
