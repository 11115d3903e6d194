#include "livf/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "livf/errors.hpp"

namespace livf {

std::size_t worker_thread_count() {
  const char* env = std::getenv("LIVF_THREADS");
  std::size_t requested = 0;
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') {
      throw InvalidParamError("LIVF_THREADS must be a non-negative integer, got '" +
                              std::string(env) + "'");
    }
    requested = static_cast<std::size_t>(v);
  }
  if (requested == 0) {
    requested = std::thread::hardware_concurrency();
  }
  return std::max<std::size_t>(1, requested);
}

namespace {
// Set while a worker runs its chunk, so nested calls stay inline instead of
// oversubscribing the thread budget.
thread_local bool g_in_parallel_region = false;
}  // namespace

void parallel_for_chunks(
    std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) {
    return;
  }
  // Spawning threads for tiny ranges costs more than it saves.
  constexpr std::size_t kMinChunk = 1024;
  std::size_t workers =
      std::min(worker_thread_count(), (n + kMinChunk - 1) / kMinChunk);
  if (g_in_parallel_region || workers <= 1) {
    fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) {
      break;
    }
    pool.emplace_back([&fn, &errors, w, begin, end] {
      g_in_parallel_region = true;
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  // Surface the lowest-indexed failure so the reported error does not
  // depend on thread timing.
  for (const auto& err : errors) {
    if (err) {
      std::rethrow_exception(err);
    }
  }
}

}  // namespace livf
