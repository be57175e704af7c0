#include "corfd/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corfd/bootstrap.hpp"
#include "corfd/error.hpp"
#include "corfd/regression.hpp"
#include "corfd/stats.hpp"

namespace corfd {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Tra: return "tra";
    case Method::Opt: return "opt";
    case Method::Boot: return "boot";
    case Method::Cor: return "cor";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "tra") return Method::Tra;
  if (s == "opt") return Method::Opt;
  if (s == "boot") return Method::Boot;
  if (s == "cor") return Method::Cor;
  fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

int pilot_size(long n, const EstimatorConfig& cfg) {
  require(cfg.K >= 2, "K must be >= 2");
  require(n >= 1, "budget must be >= 1");
  long n_b = cfg.n_b;
  if (n_b <= 0) {
    require(cfg.r > 0.0 && cfg.r <= 1.0, "r must lie in (0, 1]");
    n_b = long(std::floor(cfg.r * double(n) / double(cfg.K) + 1e-9));
  }
  if (n_b < 2)
    fail(ErrorCode::Budget, "budget " + std::to_string(n) +
                                " leaves fewer than 2 pilot pairs per perturbation");
  if (n_b * cfg.K > n)
    fail(ErrorCode::Budget, "pilot K*n_b exceeds the budget " + std::to_string(n));
  return int(n_b);
}

PilotData generate_pilot(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         int n_b, const EstimatorConfig& cfg, RngStream& rng) {
  PilotData pilot;
  if (cfg.coefficients) {
    require(int(cfg.coefficients->size()) == cfg.K,
            "fixed coefficients must have K entries");
    pilot.set = make_perturbation_set(*cfg.coefficients, n_b, cfg.gamma);
  } else {
    RngStream coef = rng.substream(stream_tag::kCoefficients);
    pilot.set = draw_perturbation_set(cfg.K, n_b, cfg.p0, coef, cfg.gamma);
  }
  const std::size_t K = pilot.set.size();
  pilot.samples.resize(K * std::size_t(n_b));
  for (std::size_t k = 0; k < K; ++k) {
    RngStream col = rng.substream(stream_tag::indexed(stream_tag::kPilot, k));
    difference_samples(oracle, theta0, coord, pilot.set.h[k], col,
                       std::span<double>(pilot.samples).subspan(k * std::size_t(n_b),
                                                                std::size_t(n_b)));
  }
  return pilot;
}

ConstantEstimates estimate_constants(const PilotData& pilot, long n,
                                     const EstimatorConfig& cfg, RngStream& rng) {
  ConstantEstimates c;
  c.budget = n;
  const InjectedConstants inj = cfg.injected.value_or(InjectedConstants{});
  if (!inj.alpha || !inj.B || !inj.sigma2) {
    const std::size_t K = pilot.K();
    std::vector<double> means(K), vars(K), sds(K);
    bool degenerate = false;
    for (std::size_t k = 0; k < K; ++k) {
      BootstrapMoments m;
      if (cfg.bootstrap == BootstrapMode::Exact) {
        m = bootstrap_moments_exact(pilot.column(k));
      } else {
        RngStream bs = rng.substream(stream_tag::indexed(stream_tag::kBootstrap, k));
        m = bootstrap_moments_mc(pilot.column(k), cfg.I, bs);
      }
      means[k] = m.mean;
      vars[k] = m.variance;
      sds[k] = std::sqrt(m.variance);
      if (!(m.variance > 0.0)) degenerate = true;
    }
    if (degenerate) std::fill(sds.begin(), sds.end(), 1.0);
    const BiasFit bias = fit_bias_wls(pilot.set.h, means, sds);
    c.alpha = bias.intercept;
    c.B_raw = bias.slope;
    c.sigma2 = fit_var_wls(pilot.set.h, vars, pilot.n_b()).sigma2;
  }
  if (inj.alpha) c.alpha = *inj.alpha;
  if (inj.B) c.B_raw = *inj.B;
  if (inj.sigma2) c.sigma2 = *inj.sigma2;
  const double eps = cfg.clamp_eps > 0.0 ? cfg.clamp_eps : default_clamp_epsilon(c.alpha);
  c.B = clamp_bias_constant(c.B_raw, eps);
  if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2))
    fail(ErrorCode::Numeric, "estimated noise variance is not positive");
  c.h = optimal_perturbation(c.sigma2, c.B, n);
  return c;
}

double transform_pilot_sample(double delta, double h_k, double h_n, double alpha,
                              double B) {
  require(h_n != 0.0, "target perturbation must be nonzero");
  return std::abs(h_k) / std::abs(h_n) * (delta - (alpha + B * h_k * h_k)) +
         (alpha + B * h_n * h_n);
}

double combine_cor_estimate(const PilotData& pilot, const ConstantEstimates& c,
                            std::span<const double> fresh) {
  double acc = 0.0;
  for (double x : fresh) acc += x;
  for (std::size_t k = 0; k < pilot.K(); ++k)
    for (double d : pilot.column(k))
      acc += transform_pilot_sample(d, pilot.set.h[k], c.h, c.alpha, c.B);
  return acc / double(fresh.size() + pilot.samples.size());
}

namespace {

double mean_of_fresh(const SimulationOracle& oracle, std::span<const double> theta0,
                     std::size_t coord, double h, long count, RngStream& rng) {
  std::vector<double> buf(static_cast<std::size_t>(count));
  difference_samples(oracle, theta0, coord, h, rng, buf);
  double acc = 0.0;
  for (double x : buf) acc += x;
  return acc / double(count);
}

}  // namespace

GradientEstimate tra_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, double h, RngStream& rng) {
  require(n >= 1, "budget must be >= 1");
  require(h != 0.0 && std::isfinite(h), "perturbation must be nonzero");
  GradientEstimate g;
  g.method = Method::Tra;
  g.pairs_used = n;
  g.perturbation = h;
  RngStream fresh = rng.substream(stream_tag::kFresh);
  g.value = mean_of_fresh(oracle, theta0, coord, h, n, fresh);
  return g;
}

GradientEstimate opt_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, const GroundTruth& truth, RngStream& rng) {
  if (!truth.bias_const || !truth.noise_var)
    fail(ErrorCode::MissingTruth, "Opt-CFD needs the true B and sigma^2");
  if (*truth.bias_const == 0.0)
    fail(ErrorCode::MissingTruth, "Opt-CFD needs a nonzero B");
  GradientEstimate g = tra_cfd(oracle, theta0, coord, n,
                               optimal_perturbation(*truth.noise_var, *truth.bias_const, n),
                               rng);
  g.method = Method::Opt;
  return g;
}

GradientEstimate boot_cfd(const SimulationOracle& oracle,
                          std::span<const double> theta0, std::size_t coord,
                          long n, const EstimatorConfig& cfg, RngStream& rng) {
  const int n_b = pilot_size(n, cfg);
  const PilotData pilot = generate_pilot(oracle, theta0, coord, n_b, cfg, rng);
  const long n2 = n - pilot.pairs();
  if (n2 <= 0) fail(ErrorCode::Budget, "BOOT-CFD has no budget left for fresh samples");
  const ConstantEstimates c = estimate_constants(pilot, n2, cfg, rng);
  GradientEstimate g;
  g.method = Method::Boot;
  g.pairs_used = n;
  g.perturbation = c.h;
  g.constants = c;
  RngStream fresh = rng.substream(stream_tag::kFresh);
  g.value = mean_of_fresh(oracle, theta0, coord, c.h, n2, fresh);
  return g;
}

GradientEstimate cor_cfd(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         long n, const EstimatorConfig& cfg, RngStream& rng) {
  const int n_b = pilot_size(n, cfg);
  const PilotData pilot = generate_pilot(oracle, theta0, coord, n_b, cfg, rng);
  const ConstantEstimates c = estimate_constants(pilot, n, cfg, rng);
  const long n2 = n - pilot.pairs();
  std::vector<double> fresh(static_cast<std::size_t>(n2));
  if (n2 > 0) {
    RngStream fs = rng.substream(stream_tag::kFresh);
    difference_samples(oracle, theta0, coord, c.h, fs, fresh);
  }
  GradientEstimate g;
  g.method = Method::Cor;
  g.pairs_used = n;
  g.perturbation = c.h;
  g.constants = c;
  g.value = combine_cor_estimate(pilot, c, fresh);
  return g;
}

double tra_perturbation(long n, const EstimatorConfig& cfg) {
  if (cfg.tra_h > 0.0) return cfg.tra_h;
  return optimal_perturbation(cfg.tra_sigma2, cfg.tra_B, n);
}

GradientEstimate estimate(Method method, const SimulationOracle& oracle,
                          std::span<const double> theta0, std::size_t coord,
                          long n, const EstimatorConfig& cfg, RngStream& rng) {
  switch (method) {
    case Method::Tra:
      return tra_cfd(oracle, theta0, coord, n, tra_perturbation(n, cfg), rng);
    case Method::Opt:
      return opt_cfd(oracle, theta0, coord, n, oracle.truth(theta0, coord), rng);
    case Method::Boot:
      return boot_cfd(oracle, theta0, coord, n, cfg, rng);
    case Method::Cor:
      return cor_cfd(oracle, theta0, coord, n, cfg, rng);
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

std::vector<RSweepRow> r_sweep(const SimulationOracle& oracle,
                               std::span<const double> theta0, std::size_t coord,
                               long n, std::span<const double> r_grid,
                               const EstimatorConfig& cfg, long reps,
                               std::uint64_t seed, double truth) {
  require(reps >= 1, "reps must be >= 1");
  std::vector<RSweepRow> rows;
  const RngStream root(seed, 0);
  for (double r : r_grid) {
    EstimatorConfig c = cfg;
    c.n_b = 0;
    c.r = r;
    const int n_b = pilot_size(n, c);
    for (Method m : {Method::Cor, Method::Boot}) {
      RSweepRow row;
      row.r = r;
      row.method = m;
      if (m == Method::Boot && n - long(n_b) * c.K <= 0) {
        rows.push_back(row);
        continue;
      }
      std::vector<double> est(static_cast<std::size_t>(reps));
      parallel_for(est.size(), [&](std::size_t i) {
        RngStream s = root.substream(stream_tag::indexed(stream_tag::kReplication, i));
        est[i] = estimate(m, oracle, theta0, coord, n, c, s).value;
      });
      const SummaryStats st = summarize(est, truth);
      row.valid = true;
      row.bias = st.bias;
      row.variance = st.variance;
      row.mse = st.mse;
      row.reps = st.reps;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace corfd
