#include "corfd/dfo.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "corfd/error.hpp"
#include "corfd/regression.hpp"
#include "corfd/stats.hpp"

namespace corfd {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

constexpr long kIterationCap = 10'000'000;

}  // namespace

void DfoConfig::validate() const {
  require(budget >= 1, "DFO budget must be >= 1");
  require(K >= 2, "K must be >= 2");
  require(a0 > 0.0, "initial step must be positive");
  require(l1 > 0.0 && l1 < l2 && l2 < 1.0, "need 0 < l1 < l2 < 1");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(memory >= 1, "L-BFGS memory must be >= 1");
  require(max_backtracks >= 0, "max_backtracks must be >= 0");
  if (gradient == GradientMethod::Cor) {
    require(T0 >= 2L * K, "T0 must be >= 2K");
    require(I >= 2, "I must be >= 2");
  }
}

LbfgsMemory::LbfgsMemory(int depth) : depth_(depth) {
  require(depth >= 1, "L-BFGS memory must be >= 1");
}

bool LbfgsMemory::push(std::vector<double> s, std::vector<double> y) {
  require(s.size() == y.size(), "s and y differ in length");
  const double sy = dot(s, y);
  if (!(sy > 1e-10 * norm(s) * norm(y))) return false;
  s_.push_back(std::move(s));
  y_.push_back(std::move(y));
  if (int(s_.size()) > depth_) {
    s_.pop_front();
    y_.pop_front();
  }
  return true;
}

std::vector<double> two_loop_direction(const LbfgsMemory& memory,
                                       std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  const std::size_t m = memory.size();
  if (m == 0) return q;
  std::vector<double> alpha(m), rho(m);
  for (std::size_t j = m; j-- > 0;) {
    rho[j] = 1.0 / dot(memory.s(j), memory.y(j));
    alpha[j] = rho[j] * dot(memory.s(j), q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * memory.y(j)[i];
  }
  const double gamma = dot(memory.s(m - 1), memory.y(m - 1)) /
                       dot(memory.y(m - 1), memory.y(m - 1));
  for (double& v : q) v *= gamma;
  for (std::size_t j = 0; j < m; ++j) {
    const double beta = rho[j] * dot(memory.y(j), q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[j] - beta) * memory.s(j)[i];
  }
  return q;
}

LineSearchResult stochastic_armijo(const SimulationOracle& oracle,
                                   std::span<const double> theta,
                                   std::span<const double> p, double slope,
                                   double a0, double l1, double l2, double sigma,
                                   RngStream& rng, bool plus_sign,
                                   int max_backtracks) {
  require(a0 > 0.0, "initial step must be positive");
  require(theta.size() == p.size(), "direction has the wrong dimension");
  LineSearchResult res;
  res.f_base = oracle.eval(theta, rng);
  res.evals = 1;
  const double sign = plus_sign ? 1.0 : -1.0;
  std::vector<double> trial(theta.size());
  double a = a0;
  for (int j = 0;; ++j) {
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = theta[i] + a * p[i];
    res.f_trial = oracle.eval(trial, rng);
    ++res.evals;
    res.step = a;
    if (res.f_trial <= res.f_base + sign * l1 * a * slope + 2.0 * sigma) return res;
    if (j == max_backtracks) {
      res.gave_up = true;
      return res;
    }
    a *= l2;
  }
}

long batch_schedule(long T_k, long k, long K) {
  require(T_k >= 1 && k >= 0 && K >= 1, "batch schedule inputs must be positive");
  const long next = (T_k + k + 1) / K * K;
  return next > 0 ? next : K;
}

std::vector<double> gradient_via_corcfd(const SimulationOracle& oracle,
                                        std::span<const double> theta, long T_k,
                                        const DfoConfig& cfg, RngStream& rng) {
  require(T_k >= 2L * cfg.K, "per-coordinate batch must be >= 2K");
  EstimatorConfig ec;
  ec.K = cfg.K;
  ec.r = cfg.r;
  ec.I = cfg.I;
  ec.bootstrap = cfg.bootstrap;
  ec.gamma = cfg.gamma;
  ec.p0 = cfg.p0;
  ec.injected = cfg.injected;
  ec.clamp_eps = cfg.clamp_eps;
  std::vector<double> g(theta.size());
  parallel_for(g.size(), [&](std::size_t i) {
    RngStream s = rng.substream(stream_tag::indexed(stream_tag::kCoordinate, i));
    g[i] = cor_cfd(oracle, theta, i, T_k, ec, s).value;
  });
  return g;
}

std::vector<double> gradient_via_tracfd(const SimulationOracle& oracle,
                                        std::span<const double> theta,
                                        const DfoConfig& cfg, RngStream& rng) {
  const double h = optimal_perturbation(cfg.tra_sigma2, cfg.tra_B, 1);
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    RngStream s = rng.substream(stream_tag::indexed(stream_tag::kCoordinate, i));
    g[i] = difference_sample(oracle, theta, i, h, s);
  }
  return g;
}

DfoTrace corcfd_lbfgs(const SimulationOracle& oracle,
                      std::span<const double> theta0, const DfoConfig& cfg,
                      std::uint64_t seed) {
  cfg.validate();
  require(theta0.size() == oracle.dim(), "starting point has the wrong dimension");
  const long d = long(theta0.size());
  const bool tra = cfg.gradient == GradientMethod::Tra;
  const RngStream root(seed, 0);

  auto gradient = [&](std::span<const double> theta, long batch, long k) {
    RngStream s = root.substream(stream_tag::indexed(stream_tag::kIteration, k));
    return tra ? gradient_via_tracfd(oracle, theta, cfg, s)
               : gradient_via_corcfd(oracle, theta, batch, cfg, s);
  };

  DfoTrace trace;
  std::vector<double> theta(theta0.begin(), theta0.end());
  long T_k = tra ? 1 : cfg.T0;
  std::vector<double> g = gradient(theta, T_k, 0);
  long calls = 2 * d * T_k;
  long t = 0;
  LbfgsMemory memory(cfg.memory);

  DfoIterate first;
  first.theta = theta;
  first.grad = g;
  first.batch = T_k;
  first.oracle_calls = calls;
  first.f_noisy = std::numeric_limits<double>::quiet_NaN();
  first.f_true = oracle.mean(theta);
  trace.iterates.push_back(first);

  long k = 0;
  trace.stop = DfoStop::Budget;
  while (t < 2 * cfg.budget) {
    if (!all_finite(g) || !all_finite(theta)) {
      trace.stop = DfoStop::NonFinite;
      break;
    }
    if (norm(g) < cfg.grad_tol) {
      trace.stop = DfoStop::SmallGradient;
      break;
    }
    if (k >= kIterationCap) {
      trace.stop = DfoStop::IterationCap;
      break;
    }
    const std::vector<double> Hg = two_loop_direction(memory, g);
    const double slope = dot(g, Hg);
    std::vector<double> p(Hg.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = -Hg[i];

    RngStream ls_rng = root.substream(stream_tag::indexed(stream_tag::kLineSearch, k));
    const LineSearchResult ls = stochastic_armijo(
        oracle, theta, p, slope, cfg.a0, cfg.l1, cfg.l2, cfg.sigma, ls_rng,
        cfg.armijo_plus_sign, cfg.max_backtracks);
    t += ls.evals;
    calls += ls.evals;

    std::vector<double> next(theta.size());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = theta[i] + ls.step * p[i];

    const long T_next = tra ? 1 : batch_schedule(T_k, k, cfg.K);
    std::vector<double> g_next = gradient(next, T_next, k + 1);
    calls += 2 * d * T_next;

    std::vector<double> s(theta.size()), y(theta.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next[i] - theta[i];
      y[i] = g_next[i] - g[i];
    }
    const bool stored = all_finite(s) && all_finite(y) && memory.push(s, y);

    t += 2 * d * T_k;
    ++k;
    theta = std::move(next);
    g = std::move(g_next);
    T_k = T_next;

    DfoIterate it;
    it.k = k;
    it.theta = theta;
    it.grad = g;
    it.step = ls.step;
    it.batch = T_k;
    it.t = t;
    it.oracle_calls = calls;
    it.t_ls = ls.evals;
    it.f_noisy = ls.f_base;
    it.f_true = oracle.mean(theta);
    it.slope = slope;
    it.ls_gave_up = ls.gave_up;
    it.memory_stored = stored;
    trace.iterates.push_back(std::move(it));
  }

  trace.theta_final = theta;
  trace.f_final = oracle.mean(theta);
  trace.t = t;
  trace.oracle_calls = calls;
  return trace;
}

}  // namespace corfd
