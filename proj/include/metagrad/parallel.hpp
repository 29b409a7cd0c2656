#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace metagrad::detail {

/// Runs body(i) for i in [0, n). With parallel = true the iterations are spread over OpenMP
/// threads; the first exception thrown by any iteration is rethrown on the calling thread.
/// Callers write results into per-index slots, so the outcome never depends on scheduling.
template <typename Body>
void for_each_index(std::size_t n, bool parallel, Body&& body) {
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace metagrad::detail
