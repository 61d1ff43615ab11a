#include "corrsmooth/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace corrsmooth {

namespace {

int configured_threads()
{
  if (const char* env = std::getenv("CORRSMOOTH_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) {
        return n;
      }
    } catch (const std::exception&) {
      // fall through to the default
    }
  }
  return tbb::info::default_concurrency();
}

tbb::global_control& control()
{
  static tbb::global_control limit(tbb::global_control::max_allowed_parallelism,
                                   static_cast<std::size_t>(configured_threads()));
  return limit;
}

} // namespace

int thread_count()
{
  control();
  return static_cast<int>(
    tbb::global_control::active_value(tbb::global_control::max_allowed_parallelism));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
  if (n == 0) {
    return;
  }
  if (thread_count() <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n),
                    [&](const tbb::blocked_range<std::size_t>& r) {
                      for (std::size_t i = r.begin(); i != r.end(); ++i) {
                        body(i);
                      }
                    });
}

} // namespace corrsmooth
