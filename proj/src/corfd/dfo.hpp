#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "corfd/estimators.hpp"
#include "corfd/oracle.hpp"
#include "corfd/rng.hpp"
#include "corfd/sampling.hpp"

namespace corfd {

enum class GradientMethod { Cor, Tra };

struct DfoConfig {
  long budget = 0;  // T, in sample pairs
  int K = 5;
  long T0 = 20;
  double r = 1.0;
  int I = 100;
  BootstrapMode bootstrap = BootstrapMode::MonteCarlo;
  double gamma = kDefaultPilotExponent;
  PerturbationGenerator p0;
  std::optional<InjectedConstants> injected;
  double clamp_eps = 0.0;  // <= 0: default floor

  double l1 = 1e-4;
  double l2 = 0.5;
  double a0 = 1.0;
  double sigma = 1.0;
  int max_backtracks = 50;
  bool armijo_plus_sign = false;  // use "+ l1 a g'Hg" in the test
  int memory = 10;
  double grad_tol = 1e-8;

  // One pair per coordinate at the optimal h for these assumed constants.
  GradientMethod gradient = GradientMethod::Cor;
  double tra_B = 1.0;
  double tra_sigma2 = 1.0;

  void validate() const;
};

// Ring of (s, y) pairs for the two-loop recursion.
class LbfgsMemory {
 public:
  explicit LbfgsMemory(int depth = 10);

  // Stores the pair unless s'y <= 1e-10 ||s|| ||y||. Returns whether stored.
  bool push(std::vector<double> s, std::vector<double> y);

  std::size_t size() const noexcept { return s_.size(); }
  int depth() const noexcept { return depth_; }
  const std::vector<double>& s(std::size_t i) const { return s_[i]; }  // oldest first
  const std::vector<double>& y(std::size_t i) const { return y_[i]; }

 private:
  int depth_;
  std::deque<std::vector<double>> s_;
  std::deque<std::vector<double>> y_;
};

// H g by the two-loop recursion, H0 = (s'y / y'y) I from the newest pair, or
// the identity when the memory is empty.
std::vector<double> two_loop_direction(const LbfgsMemory& memory,
                                       std::span<const double> g);

struct LineSearchResult {
  double step = 0.0;
  long evals = 0;        // base draw plus one per trial
  bool gave_up = false;
  double f_base = 0.0;   // Y(theta)
  double f_trial = 0.0;  // Y at the returned step
};

// Backtracks a = a0 l2^j until Y(theta + a p) <= Y(theta) - l1 a slope + 2 sigma
// (the sign flips with plus_sign). slope = g' H g. After max_backtracks
// reductions returns the smallest trial step with gave_up set.
LineSearchResult stochastic_armijo(const SimulationOracle& oracle,
                                   std::span<const double> theta,
                                   std::span<const double> p, double slope,
                                   double a0, double l1, double l2, double sigma,
                                   RngStream& rng, bool plus_sign = false,
                                   int max_backtracks = 50);

// floor((T_k + k + 1) / K) K, raised to K when that is 0.
long batch_schedule(long T_k, long k, long K);

// Per-coordinate Cor-CFD, T_k pairs each; coordinate i uses substream
// indexed(kCoordinate, i).
std::vector<double> gradient_via_corcfd(const SimulationOracle& oracle,
                                        std::span<const double> theta, long T_k,
                                        const DfoConfig& cfg, RngStream& rng);

// One pair per coordinate at h = (sigma2 / (4 B^2))^(1/6).
std::vector<double> gradient_via_tracfd(const SimulationOracle& oracle,
                                        std::span<const double> theta,
                                        const DfoConfig& cfg, RngStream& rng);

struct DfoIterate {
  long k = 0;
  std::vector<double> theta;
  std::vector<double> grad;
  double step = 0.0;      // a_k that produced this iterate (0 for k = 0)
  long batch = 0;         // T_k of grad
  long t = 0;             // counter as updated by the algorithm
  long oracle_calls = 0;  // evaluations actually made so far
  long t_ls = 0;
  double f_noisy = 0.0;   // line-search base draw Y(theta_{k-1}); NaN at k = 0
  std::optional<double> f_true;
  double slope = 0.0;     // g' H g of the search that produced this iterate
  bool ls_gave_up = false;
  bool memory_stored = false;
};

enum class DfoStop { Budget, SmallGradient, NonFinite, IterationCap };

struct DfoTrace {
  std::vector<DfoIterate> iterates;
  std::vector<double> theta_final;
  std::optional<double> f_final;
  long t = 0;
  long oracle_calls = 0;
  DfoStop stop = DfoStop::Budget;
};

// CorCFD-L-BFGS. t starts at 0 and the initial gradient is not charged; each
// loop pass adds t_ls and then 2 d T_k with the batch size before the update.
// oracle_calls counts every evaluation including the initial gradient.
DfoTrace corcfd_lbfgs(const SimulationOracle& oracle,
                      std::span<const double> theta0, const DfoConfig& cfg,
                      std::uint64_t seed);

}  // namespace corfd
