#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "corfd/oracle.hpp"
#include "corfd/rng.hpp"

namespace corfd {

// psi(mu0, sigma0^2, L, U): Normal(mu0, sigma0^2) conditioned on [L, U].
struct PerturbationGenerator {
  double mu0 = 0.0;
  double sigma0 = 1.0;
  double lower = 0.1;
  double upper = std::numeric_limits<double>::infinity();

  // Probability mass of [L, U] under the untruncated normal.
  double acceptance() const;
  void validate() const;
};

inline constexpr double kDefaultPilotExponent = -0.1;

// Pilot perturbations h_k = c_k * n_b^gamma.
struct PerturbationSet {
  std::vector<double> coefficients;
  int pilot_size = 0;
  double gamma = kDefaultPilotExponent;
  std::vector<double> h;

  std::size_t size() const noexcept { return h.size(); }
};

double truncated_normal(const PerturbationGenerator& gen, RngStream& rng);

// Draws K i.i.d. coefficients from gen, redrawing any whose square is within
// 1e-6 (relative) of an earlier coefficient's square.
PerturbationSet draw_perturbation_set(int K, int n_b,
                                      const PerturbationGenerator& gen,
                                      RngStream& rng,
                                      double gamma = kDefaultPilotExponent);

// Same layout from caller-chosen coefficients (fixed-c experiments).
PerturbationSet make_perturbation_set(std::vector<double> coefficients, int n_b,
                                      double gamma = kDefaultPilotExponent);

// (Y(theta0 + h e_coord) - Y(theta0 - h e_coord)) / (2h), the two draws
// independent. One call consumes one sample pair.
double difference_sample(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         double h, RngStream& rng);

// out.size() consecutive difference samples at h from the same stream.
void difference_samples(const SimulationOracle& oracle,
                        std::span<const double> theta0, std::size_t coord,
                        double h, RngStream& rng, std::span<double> out);

}  // namespace corfd
