#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corfd/oracle.hpp"
#include "corfd/rng.hpp"
#include "corfd/sampling.hpp"

namespace corfd {

enum class Method { Tra, Opt, Boot, Cor };
enum class BootstrapMode { MonteCarlo, Exact };

std::string_view method_name(Method m);
Method parse_method(std::string_view s);

// Constants supplied by the caller instead of estimated from the pilot. Unset
// fields are still estimated.
struct InjectedConstants {
  std::optional<double> alpha;
  std::optional<double> B;
  std::optional<double> sigma2;
};

struct EstimatorConfig {
  int K = 10;
  int n_b = 0;        // pilot pairs per perturbation; 0 derives it from r
  double r = 1.0;     // pilot fraction K n_b / n
  int I = 1000;       // bootstrap replicates (MonteCarlo mode)
  BootstrapMode bootstrap = BootstrapMode::MonteCarlo;
  double gamma = kDefaultPilotExponent;
  PerturbationGenerator p0;
  double clamp_eps = 0.0;  // <= 0 selects 1e-4 * max(1, |alpha'_hat|)
  std::optional<std::vector<double>> coefficients;  // fixed c, else drawn from p0
  std::optional<InjectedConstants> injected;

  // Tra-CFD: fixed h when > 0, else the optimal h for the assumed constants.
  double tra_h = 0.0;
  double tra_B = 5.0;
  double tra_sigma2 = 1.0;
};

// n_b for budget n: cfg.n_b when set, else floor(r n / K).
int pilot_size(long n, const EstimatorConfig& cfg);

struct PilotData {
  PerturbationSet set;
  std::vector<double> samples;  // K x n_b, row k holds the samples at h_k

  std::size_t K() const noexcept { return set.size(); }
  int n_b() const noexcept { return set.pilot_size; }
  long pairs() const noexcept { return long(samples.size()); }
  std::span<const double> column(std::size_t k) const {
    return std::span<const double>(samples).subspan(k * std::size_t(n_b()),
                                                    std::size_t(n_b()));
  }
};

struct ConstantEstimates {
  double alpha = 0.0;     // alpha'_hat
  double B = 0.0;         // clamped
  double B_raw = 0.0;     // before clamping
  double sigma2 = 0.0;
  double h = 0.0;         // (sigma2 / (4 n B^2))^(1/6)
  long budget = 0;        // n used for h
};

struct GradientEstimate {
  double value = 0.0;
  Method method = Method::Cor;
  long pairs_used = 0;
  double perturbation = 0.0;
  std::optional<ConstantEstimates> constants;
};

// Pilot stage: draws (or takes) the coefficients and K n_b difference samples.
// Column k uses its own substream so the grid is replayable column by column.
PilotData generate_pilot(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         int n_b, const EstimatorConfig& cfg, RngStream& rng);

// Bootstrap moments per column, WLS fits, clamp, and h for budget n. If any
// column has zero bootstrap variance (noise-free oracle) the bias fit falls
// back to equal weights.
ConstantEstimates estimate_constants(const PilotData& pilot, long n,
                                     const EstimatorConfig& cfg, RngStream& rng);

// (|h_k| / |h_n|) (delta - (alpha + B h_k^2)) + (alpha + B h_n^2).
double transform_pilot_sample(double delta, double h_k, double h_n,
                              double alpha, double B);

// (sum fresh + sum transformed pilot) / (fresh.size() + pilot.pairs()).
double combine_cor_estimate(const PilotData& pilot, const ConstantEstimates& c,
                            std::span<const double> fresh);

GradientEstimate tra_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, double h, RngStream& rng);

// Throws MissingTruth when B or sigma^2 is unavailable.
GradientEstimate opt_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, const GroundTruth& truth, RngStream& rng);

// Throws Budget when n - K n_b <= 0.
GradientEstimate boot_cfd(const SimulationOracle& oracle,
                          std::span<const double> theta0, std::size_t coord,
                          long n, const EstimatorConfig& cfg, RngStream& rng);

GradientEstimate cor_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, const EstimatorConfig& cfg, RngStream& rng);

// Dispatch by method. Tra uses cfg.tra_*; Opt reads the oracle's ground truth.
GradientEstimate estimate(Method method, const SimulationOracle& oracle,
                          std::span<const double> theta0, std::size_t coord,
                          long n, const EstimatorConfig& cfg, RngStream& rng);

// Perturbation Tra-CFD uses at budget n.
double tra_perturbation(long n, const EstimatorConfig& cfg);

struct RSweepRow {
  double r = 0.0;
  Method method = Method::Cor;
  bool valid = false;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  long reps = 0;
};

// Replicated MSE of Cor-CFD and BOOT-CFD on each r. Replication i uses the
// stream RngStream(seed, 0).substream(indexed(kReplication, i)) for every r.
// BOOT-CFD rows with no fresh budget are marked invalid.
std::vector<RSweepRow> r_sweep(const SimulationOracle& oracle,
                               std::span<const double> theta0, std::size_t coord,
                               long n, std::span<const double> r_grid,
                               const EstimatorConfig& cfg, long reps,
                               std::uint64_t seed, double truth);

}  // namespace corfd
