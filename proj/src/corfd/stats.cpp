#include "corfd/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "corfd/error.hpp"

namespace corfd {

SummaryStats summarize(std::span<const double> estimates, double truth) {
  require(!estimates.empty(), "summary needs at least one estimate");
  const double R = double(estimates.size());
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= R;
  double var = 0.0;
  double mse = 0.0;
  for (double e : estimates) {
    var += (e - mean) * (e - mean);
    mse += (e - truth) * (e - truth);
  }
  SummaryStats s;
  s.bias = mean - truth;
  s.variance = var / R;
  s.mse = mse / R;
  s.reps = long(estimates.size());
  s.truth = truth;
  s.mean = mean;
  return s;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CORFD_THREADS")) {
    try {
      const long want = std::stol(env);
      if (want >= 1) n = unsigned(std::min(want, 256L));
    } catch (const std::exception&) {
      // malformed value: ignore
    }
  }
  return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace corfd
