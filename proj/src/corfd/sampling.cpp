#include "corfd/sampling.hpp"

#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <utility>

#include "corfd/error.hpp"

namespace corfd {

namespace {

const boost::math::normal kStdNormal;

double cdf(double z) {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  return boost::math::cdf(kStdNormal, z);
}

double survival(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return boost::math::cdf(boost::math::complement(kStdNormal, z));
}

constexpr int kMaxRedraws = 1000;
constexpr double kSquareTolerance = 1e-6;

}  // namespace

double PerturbationGenerator::acceptance() const {
  const double a = (lower - mu0) / sigma0;
  const double b = (upper - mu0) / sigma0;
  // Subtract in whichever tail keeps the most precision.
  return a > 0.0 ? survival(a) - survival(b) : cdf(b) - cdf(a);
}

void PerturbationGenerator::validate() const {
  require(std::isfinite(mu0), "P0 mean must be finite");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "P0 sigma0 must be positive");
  require(std::isfinite(lower) && lower > 0.0,
          "P0 lower bound must be positive (coefficients bounded away from 0)");
  require(upper > lower, "P0 upper bound must exceed the lower bound");
  if (!(acceptance() > 1e-12))
    fail(ErrorCode::Numeric, "P0 truncation region has negligible mass");
}

double truncated_normal(const PerturbationGenerator& gen, RngStream& rng) {
  gen.validate();
  const double p = gen.acceptance();
  if (p >= 0.1) {
    for (;;) {
      const double x = gen.mu0 + gen.sigma0 * rng.normal();
      if (x >= gen.lower && x <= gen.upper) return x;
    }
  }
  const double a = (gen.lower - gen.mu0) / gen.sigma0;
  const double b = (gen.upper - gen.mu0) / gen.sigma0;
  const double u = rng.uniform();
  double z;
  if (a > 0.0) {
    const double qa = survival(a);
    const double q = qa - u * (qa - survival(b));
    z = boost::math::quantile(boost::math::complement(kStdNormal, q));
  } else {
    const double pa = cdf(a);
    z = boost::math::quantile(kStdNormal, pa + u * (cdf(b) - pa));
  }
  const double x = gen.mu0 + gen.sigma0 * z;
  return std::clamp(x, gen.lower, gen.upper);
}

PerturbationSet make_perturbation_set(std::vector<double> coefficients, int n_b,
                                      double gamma) {
  require(coefficients.size() >= 1, "need at least one coefficient");
  require(n_b >= 2, "pilot size n_b must be >= 2");
  require(std::isfinite(gamma) && gamma < 0.0, "pilot exponent must be negative");
  PerturbationSet set;
  set.pilot_size = n_b;
  set.gamma = gamma;
  const double scale = std::pow(double(n_b), gamma);
  set.h.reserve(coefficients.size());
  for (double c : coefficients) {
    require(std::isfinite(c) && c > 0.0, "coefficients must be positive");
    set.h.push_back(c * scale);
  }
  set.coefficients = std::move(coefficients);
  return set;
}

PerturbationSet draw_perturbation_set(int K, int n_b,
                                      const PerturbationGenerator& gen,
                                      RngStream& rng, double gamma) {
  require(K >= 2, "need K >= 2 perturbations");
  require(n_b >= 2, "pilot size n_b must be >= 2");
  gen.validate();
  std::vector<double> c;
  c.reserve(std::size_t(K));
  int rejected = 0;
  while (int(c.size()) < K) {
    const double x = truncated_normal(gen, rng);
    bool distinct = true;
    for (double prev : c) {
      const double a = x * x;
      const double b = prev * prev;
      if (std::abs(a - b) <= kSquareTolerance * std::max(a, b)) {
        distinct = false;
        break;
      }
    }
    if (distinct) {
      c.push_back(x);
      rejected = 0;
    } else if (++rejected >= kMaxRedraws) {
      fail(ErrorCode::Numeric,
           "perturbation generator keeps producing coincident coefficients");
    }
  }
  return make_perturbation_set(std::move(c), n_b, gamma);
}

void difference_samples(const SimulationOracle& oracle,
                        std::span<const double> theta0, std::size_t coord,
                        double h, RngStream& rng, std::span<double> out) {
  require(h != 0.0 && std::isfinite(h), "perturbation h must be nonzero");
  require(coord < theta0.size(), "coordinate out of range");
  std::vector<double> point(theta0.begin(), theta0.end());
  const double base = theta0[coord];
  const double plus = base + h;
  const double minus = base - h;
  const double inv = 1.0 / (2.0 * h);
  for (double& v : out) {
    point[coord] = plus;
    const double up = oracle.eval(point, rng);
    point[coord] = minus;
    const double down = oracle.eval(point, rng);
    v = (up - down) * inv;
  }
}

double difference_sample(const SimulationOracle& oracle,
                         std::span<const double> theta0, std::size_t coord,
                         double h, RngStream& rng) {
  double v = 0.0;
  difference_samples(oracle, theta0, coord, h, rng, std::span<double>(&v, 1));
  return v;
}

}  // namespace corfd
