#include "corfd/bootstrap.hpp"

#include <algorithm>
#include <vector>

#include "corfd/error.hpp"

namespace corfd {

namespace {

bool constant_column(std::span<const double> column) {
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  return *lo == *hi;
}

}  // namespace

BootstrapMoments bootstrap_moments_mc(std::span<const double> column, int I,
                                      RngStream& rng) {
  const std::size_t n = column.size();
  require(n >= 2, "bootstrap needs n_b >= 2 samples");
  require(I >= 2, "bootstrap needs I >= 2 replicates");
  if (constant_column(column)) return {column[0], 0.0, I};

  std::vector<double> means(static_cast<std::size_t>(I));
  for (double& m : means) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += column[rng.index(n)];
    m = acc / double(n);
  }

  double avg = 0.0;
  for (double m : means) avg += m;
  avg /= double(I);
  double ss = 0.0;
  for (double m : means) ss += (m - avg) * (m - avg);
  return {avg, ss / double(I), I};
}

BootstrapMoments bootstrap_moments_exact(std::span<const double> column) {
  const std::size_t n = column.size();
  require(n >= 2, "bootstrap needs n_b >= 2 samples");
  if (constant_column(column)) return {column[0], 0.0, 0};
  double avg = 0.0;
  for (double x : column) avg += x;
  avg /= double(n);
  double ss = 0.0;
  for (double x : column) ss += (x - avg) * (x - avg);
  // (n-1) S^2 / n^2 with S^2 = ss / (n-1).
  const double nn = double(n);
  return {avg, std::max(ss / (nn * nn), 0.0), 0};
}

}  // namespace corfd
