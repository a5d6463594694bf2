#include "fama/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace fama {

namespace {

std::atomic<std::size_t> g_override{0};
thread_local bool t_in_parallel = false;

std::size_t default_threads() {
  if (const char* env = std::getenv("FAMA_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<std::size_t>(value);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace

std::size_t thread_count() {
  const std::size_t forced = g_override.load();
  return forced > 0 ? forced : default_threads();
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1 || t_in_parallel) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  struct Failure {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;
  };
  std::vector<Failure> failures(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;

  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      t_in_parallel = true;
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          failures[w] = {i, std::current_exception()};
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  const auto first = std::min_element(failures.begin(), failures.end(),
                                      [](const Failure& a, const Failure& b) { return a.index < b.index; });
  if (first->error) std::rethrow_exception(first->error);
}

}  // namespace fama
