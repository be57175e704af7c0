#pragma once

#include <span>

#include "corfd/rng.hpp"

namespace corfd {

// Bootstrap mean and variance of the column average. replicates == 0 marks
// the exact (closed-form) moments.
struct BootstrapMoments {
  double mean = 0.0;
  double variance = 0.0;
  int replicates = 0;
};

// Monte Carlo bootstrap: I resamples with replacement of the n_b samples.
// mean is the average of the I bootstrap means; variance is their spread with
// denominator I (not I - 1).
BootstrapMoments bootstrap_moments_mc(std::span<const double> column, int I,
                                      RngStream& rng);

// Exact bootstrap moments: mean = sample mean, variance = (n_b - 1) S^2 / n_b^2
// with S^2 the unbiased sample variance.
BootstrapMoments bootstrap_moments_exact(std::span<const double> column);

}  // namespace corfd
