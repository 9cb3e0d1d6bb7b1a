#include "frontlab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "frontlab/errors.hpp"

namespace frontlab {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FRONTLAB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("FRONTLAB_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  const int w = std::max(1, std::min<int>(resolve_workers(workers), int(n)));
  std::vector<std::exception_ptr> errors(n);
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) try {
            job(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace frontlab
