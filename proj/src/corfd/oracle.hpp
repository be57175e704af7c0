#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corfd/rng.hpp"

namespace corfd {

// Known constants of a test problem at a point. Every field is optional;
// baselines that need a field refuse to run when it is missing.
struct GroundTruth {
  std::optional<double> deriv;        // alpha'(theta0)
  std::optional<double> bias_const;   // B = alpha'''(theta0) / 6
  std::optional<double> fifth_const;  // D = alpha^(5)(theta0) / 120
  std::optional<double> noise_var;    // sigma^2(theta0)
};

// A noisy black box Y(theta) with E[Y(theta)] = alpha(theta). Implementations
// are immutable; eval is pure given the stream, so concurrent calls are fine
// as long as every caller owns its stream.
class SimulationOracle {
 public:
  virtual ~SimulationOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string label() const = 0;
  virtual double eval(std::span<const double> theta, RngStream& rng) const = 0;

  // Noise-free alpha(theta), when known in closed form.
  virtual std::optional<double> mean(std::span<const double> /*theta*/) const {
    return std::nullopt;
  }
  // Constants for d/d theta_coord at theta0.
  virtual GroundTruth truth(std::span<const double> /*theta0*/,
                            std::size_t /*coord*/) const {
    return {};
  }
  virtual std::optional<std::vector<double>> minimizer() const {
    return std::nullopt;
  }
};

using OraclePtr = std::shared_ptr<const SimulationOracle>;

enum class SinCase { Homoscedastic, Heteroscedastic };
enum class BenchFunction { Rosenbrock, Zakharov };
enum class QueueParameter { Arrival, Service };
// Waiting = time in queue W_i; Sojourn = W_i + S_i (time in system).
enum class QueueMetric { Waiting, Sojourn };

struct QueueSpec {
  double arrival_rate = 4.0;
  double service_rate = 4.0;
  int customers = 10;
};

OraclePtr sin_oracle(double kappa, SinCase which);
OraclePtr poly_oracle();
OraclePtr noisy_bench_oracle(BenchFunction fn, std::size_t d);
OraclePtr queue_oracle(const QueueSpec& spec, QueueParameter parameter,
                       QueueMetric metric = QueueMetric::Sojourn);

// Wraps an arbitrary mean function with additive Normal(0, noise_sd^2) noise.
// noise_sd = 0 yields a deterministic oracle, handy for exactness checks.
using MeanFunction = std::function<double(std::span<const double>)>;
OraclePtr function_oracle(std::string label, std::size_t dim, MeanFunction fn,
                          double noise_sd);

double rosenbrock(std::span<const double> x);
double zakharov(std::span<const double> x);

// One path of the M/M/1 queue: average of the chosen metric over the first
// N customers, starting empty. Draw order per customer i is S_i then A_{i+1}.
double simulate_queue(const QueueSpec& spec, QueueMetric metric, RngStream& rng);

// Likelihood-ratio (score function) estimate of d E[metric] / d rate, averaged
// over reps independent paths.
double lr_derivative(const QueueSpec& spec, QueueParameter parameter,
                     QueueMetric metric, long reps, RngStream& rng);

// A problem selected by its CLI id together with its natural evaluation point.
struct Problem {
  std::string id;
  OraclePtr oracle;
  std::vector<double> theta0;
  // Simulation-based reference derivative for problems without a closed form
  // (the queue): (reps, stream) -> estimate. Empty otherwise.
  std::function<double(long, RngStream&)> reference_derivative;
};

// Ids: sin1, sin2 (optionally sin1@<kappa>), poly@<theta0>, rosenbrock,
// zakharov@<d>, queue@<lam>,<mu>,<N>,<arrival|service>[,<waiting|sojourn>].
Problem parse_problem(std::string_view id);

}  // namespace corfd
