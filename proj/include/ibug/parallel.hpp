#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ibug {

/// Thread-count environment variable read by apply_thread_env().
inline constexpr const char* kThreadEnvVar = "IBUG_NUM_THREADS";

/// Applies IBUG_NUM_THREADS, if set, to the OpenMP runtime. Returns the
/// thread count in effect.
int apply_thread_env();

int max_threads();

/// Sets the OpenMP thread count for its lifetime.
class ScopedThreads {
 public:
  explicit ScopedThreads(int n);
  ~ScopedThreads();
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

/// Runs body(i) for i in [0, n) across threads. Iterations must write only to
/// their own slots. If any iteration throws, the exception of the lowest
/// failing index is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  bool failed = false;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) reduction(|| : failed)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
      failed = true;
    }
  }
  if (!failed) return;
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ibug
