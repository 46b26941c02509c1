#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gemid {

/// Global cap on worker threads. Results never depend on it: every parallel
/// loop writes into a slot indexed by iteration, and reductions happen in
/// index order afterwards.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Resolve `--threads` / GEMID_THREADS; 0 means "not given".
std::size_t resolve_thread_count(std::size_t cli_value);

/// Run fn(i) for i in [0, n). Nested calls from inside a worker run inline.
/// The first exception thrown by any iteration is rethrown after all
/// workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, F&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace gemid
