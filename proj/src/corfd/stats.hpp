#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace corfd {

// Replication summary. variance uses denominator R so mse = bias^2 + variance.
struct SummaryStats {
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  long reps = 0;
  double truth = 0.0;
  double mean = 0.0;
};

SummaryStats summarize(std::span<const double> estimates, double truth);

// Worker count: CORFD_THREADS when set, else hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, count) on up to worker_count() threads. Results must
// be written by index so the outcome does not depend on the schedule. The
// first exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace corfd
