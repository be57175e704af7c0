#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "corfd/dfo.hpp"
#include "corfd/error.hpp"
#include "corfd/oracle.hpp"
#include "corfd/regression.hpp"
#include "doctest.h"

using namespace corfd;

namespace {

// Dense inverse-BFGS recursion from H0 = gamma I, gamma from the newest pair.
Eigen::VectorXd dense_bfgs(const std::vector<Eigen::VectorXd>& S,
                           const std::vector<Eigen::VectorXd>& Y, const Eigen::VectorXd& g) {
  const Eigen::Index d = g.size();
  const double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
  Eigen::MatrixXd H = gamma * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t j = 0; j < S.size(); ++j) {
    const double rho = 1.0 / S[j].dot(Y[j]);
    H = (I - rho * S[j] * Y[j].transpose()) * H * (I - rho * Y[j] * S[j].transpose()) +
        rho * S[j] * S[j].transpose();
  }
  return H * g;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

OraclePtr shifted_quadratic(std::size_t d, double noise) {
  return function_oracle("quad", d, [](std::span<const double> x) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) f += double(i + 1) * (x[i] - 1.0) * (x[i] - 1.0);
    return f;
  }, noise);
}

}  // namespace

TEST_CASE("two-loop recursion equals the dense inverse BFGS update") {
  std::srand(3);
  const int d = 5;
  // Pairs from a fixed SPD matrix so every s'y > 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(d, d);
  A = A * A.transpose() + d * Eigen::MatrixXd::Identity(d, d);
  std::vector<Eigen::VectorXd> S, Y;
  LbfgsMemory mem(10);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd s = Eigen::VectorXd::Random(d);
    const Eigen::VectorXd y = A * s;
    S.push_back(s);
    Y.push_back(y);
    CHECK(mem.push(to_std(s), to_std(y)));
  }
  const Eigen::VectorXd g = Eigen::VectorXd::Random(d);
  const std::vector<double> gs = to_std(g);
  const auto hg = two_loop_direction(mem, gs);
  const Eigen::VectorXd ref = dense_bfgs(S, Y, g);
  for (int i = 0; i < d; ++i) CHECK(hg[std::size_t(i)] == doctest::Approx(ref(i)).epsilon(1e-10));

  // Depth 2 keeps only the newest two pairs.
  LbfgsMemory short_mem(2);
  for (int j = 0; j < 4; ++j) short_mem.push(to_std(S[std::size_t(j)]), to_std(Y[std::size_t(j)]));
  CHECK(short_mem.size() == 2);
  const auto hg2 = two_loop_direction(short_mem, gs);
  const Eigen::VectorXd ref2 = dense_bfgs({S[2], S[3]}, {Y[2], Y[3]}, g);
  for (int i = 0; i < d; ++i) CHECK(hg2[std::size_t(i)] == doctest::Approx(ref2(i)).epsilon(1e-10));
}

TEST_CASE("empty memory gives the identity and bad pairs are skipped") {
  LbfgsMemory mem(3);
  const std::vector<double> g{1.0, -2.0};
  CHECK(two_loop_direction(mem, g) == g);
  CHECK_FALSE(mem.push({1.0, 0.0}, {-1.0, 0.0}));
  CHECK_FALSE(mem.push({1.0, 0.0}, {0.0, 1.0}));
  CHECK(mem.size() == 0);
  CHECK(mem.push({1.0, 0.0}, {2.0, 0.0}));
  const auto hg = two_loop_direction(mem, g);
  // One pair along e1 with curvature 2: H = diag(1/2, 1/2).
  CHECK(hg[0] == doctest::Approx(0.5));
  CHECK(hg[1] == doctest::Approx(-1.0));
}

TEST_CASE("stochastic Armijo examples") {
  const auto sq = function_oracle("sq", 1, [](std::span<const double> x) { return x[0] * x[0]; }, 0.0);
  const std::vector<double> theta{1.0};
  RngStream rng(1, 0);

  // A huge noise allowance accepts the first trial.
  const LineSearchResult loose = stochastic_armijo(*sq, theta, std::vector<double>{-2.0}, 4.0,
                                                   1.0, 1e-4, 0.5, 1e6, rng);
  CHECK(loose.step == 1.0);
  CHECK(loose.evals == 2);
  CHECK_FALSE(loose.gave_up);

  // Noise-free: a = 1 lands on f = 1 > 1 - 4e-4; a = 0.5 lands on the minimum.
  const LineSearchResult exact = stochastic_armijo(*sq, theta, std::vector<double>{-2.0}, 4.0,
                                                   1.0, 1e-4, 0.5, 0.0, rng);
  CHECK(exact.step == 0.5);
  CHECK(exact.evals == 3);
  CHECK(exact.f_base == 1.0);
  CHECK(exact.f_trial == 0.0);

  // Uphill: never accepted, gives up after 50 reductions.
  const LineSearchResult up = stochastic_armijo(*sq, theta, std::vector<double>{2.0}, 4.0,
                                                1.0, 1e-4, 0.5, 0.0, rng);
  CHECK(up.gave_up);
  CHECK(up.step == std::ldexp(1.0, -50));
  CHECK(up.evals == 52);

  // The printed sign relaxes the test by 2 l1 a slope.
  const LineSearchResult plus = stochastic_armijo(*sq, theta, std::vector<double>{-2.0}, 4.0,
                                                  1.0, 0.3, 0.5, 0.0, rng, true);
  CHECK(plus.step == 1.0);
}

TEST_CASE("batch schedule") {
  CHECK(batch_schedule(20, 0, 5) == 20);
  CHECK(batch_schedule(20, 3, 5) == 20);
  CHECK(batch_schedule(20, 4, 5) == 25);
  CHECK(batch_schedule(25, 5, 5) == 30);
  CHECK(batch_schedule(1, 0, 5) == 5);
  // Every value is a positive multiple of K and never shrinks.
  long T = 20;
  for (long k = 0; k < 200; ++k) {
    const long next = batch_schedule(T, k, 5);
    CHECK(next % 5 == 0);
    CHECK(next >= T);
    T = next;
  }
}

TEST_CASE("budget accounting invariants") {
  const Problem p = parse_problem("zakharov@3");
  DfoConfig cfg;
  cfg.budget = 3000;
  const DfoTrace tr = corcfd_lbfgs(*p.oracle, p.theta0, cfg, 5);
  REQUIRE(tr.iterates.size() >= 2);
  const long d = 3;
  long t = 0, calls = 2 * d * cfg.T0;
  CHECK(tr.iterates[0].oracle_calls == calls);
  CHECK(tr.iterates[0].t == 0);
  CHECK(std::isnan(tr.iterates[0].f_noisy));
  for (std::size_t i = 1; i < tr.iterates.size(); ++i) {
    const DfoIterate& it = tr.iterates[i];
    const DfoIterate& prev = tr.iterates[i - 1];
    CHECK(it.k == long(i));
    CHECK(it.t_ls >= 2);
    CHECK(it.t_ls <= 2 + cfg.max_backtracks);
    CHECK(it.batch == batch_schedule(prev.batch, prev.k, cfg.K));
    t += it.t_ls + 2 * d * prev.batch;
    calls += it.t_ls + 2 * d * it.batch;
    CHECK(it.t == t);
    CHECK(it.oracle_calls == calls);
    if (i + 1 < tr.iterates.size()) CHECK(it.t < 2 * cfg.budget);
  }
  CHECK(tr.stop == DfoStop::Budget);
  CHECK(tr.t == t);
  CHECK(tr.t >= 2 * cfg.budget);
  CHECK(tr.oracle_calls == calls);
}

TEST_CASE("noise-free quadratic converges") {
  const auto o = shifted_quadratic(3, 0.0);
  DfoConfig cfg;
  cfg.budget = 20000;
  cfg.sigma = 0.0;
  cfg.injected = InjectedConstants{std::nullopt, 1e-30, 1.0};
  cfg.clamp_eps = 1e-30;
  const std::vector<double> x0{-2.0, 0.5, 3.0};
  const DfoTrace tr = corcfd_lbfgs(*o, x0, cfg, 1);
  for (double v : tr.theta_final) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(tr.f_final);
  CHECK(*tr.f_final < 1e-10);
}

TEST_CASE("runs are reproducible and the Tra variant spends d pairs per gradient") {
  const Problem p = parse_problem("rosenbrock");
  DfoConfig cfg;
  cfg.budget = 2000;
  const DfoTrace a = corcfd_lbfgs(*p.oracle, p.theta0, cfg, 9);
  const DfoTrace b = corcfd_lbfgs(*p.oracle, p.theta0, cfg, 9);
  CHECK(a.theta_final == b.theta_final);
  CHECK(a.oracle_calls == b.oracle_calls);

  cfg.gradient = GradientMethod::Tra;
  const DfoTrace t = corcfd_lbfgs(*p.oracle, p.theta0, cfg, 9);
  REQUIRE(t.iterates.size() >= 2);
  for (std::size_t i = 1; i < t.iterates.size(); ++i) {
    CHECK(t.iterates[i].batch == 1);
    CHECK(t.iterates[i].t - t.iterates[i - 1].t == t.iterates[i].t_ls + 4);
  }
  CHECK(optimal_perturbation(1.0, 1.0, 1) == doctest::Approx(std::pow(0.25, 1.0 / 6.0)));
}

TEST_CASE("config validation") {
  const Problem p = parse_problem("zakharov@2");
  DfoConfig cfg;
  CHECK_THROWS_AS(corcfd_lbfgs(*p.oracle, p.theta0, cfg, 1), Error);
  cfg.budget = 100;
  cfg.T0 = 5;
  CHECK_THROWS_AS(corcfd_lbfgs(*p.oracle, p.theta0, cfg, 1), Error);
  cfg.T0 = 20;
  cfg.l1 = 0.6;
  CHECK_THROWS_AS(corcfd_lbfgs(*p.oracle, p.theta0, cfg, 1), Error);
  cfg.l1 = 1e-4;
  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(corcfd_lbfgs(*p.oracle, wrong, cfg, 1), Error);
}

TEST_CASE("small L-BFGS examples") {
  LbfgsMemory mem(5);
  const std::vector<double> g{3.0, -1.0};
  CHECK(two_loop_direction(mem, g) == g);
  const std::vector<double> e1{1.0, 0.0, 0.0};
  mem.push(e1, e1);
  const auto hg = two_loop_direction(mem, e1);
  CHECK(hg[0] == doctest::Approx(1.0));
  CHECK(std::abs(hg[1]) + std::abs(hg[2]) == 0.0);
}

TEST_CASE("gradient via Cor-CFD") {
  // d = 1 reduces to one cor_cfd call on the coordinate substream.
  const Problem p = parse_problem("poly@1");
  DfoConfig cfg;
  cfg.budget = 1;
  RngStream rng(4, 0);
  const auto g = gradient_via_corcfd(*p.oracle, p.theta0, 100, cfg, rng);
  EstimatorConfig ec;
  ec.K = cfg.K;
  ec.I = cfg.I;
  RngStream s = rng.substream(stream_tag::indexed(stream_tag::kCoordinate, 0));
  CHECK(g[0] == cor_cfd(*p.oracle, p.theta0, 0, 100, ec, s).value);

  // Noise-free sum of squares at ones: the gradient is 2 in each coordinate,
  // up to the clamp floor times h^2.
  const auto sq = function_oracle("sq", 4, [](std::span<const double> x) {
    double f = 0.0;
    for (double v : x) f += v * v;
    return f;
  }, 0.0);
  DfoConfig q;
  q.injected = InjectedConstants{std::nullopt, std::nullopt, 1.0};
  const std::vector<double> ones(4, 1.0);
  const auto gq = gradient_via_corcfd(*sq, ones, 100, q, rng);
  for (double v : gq) CHECK(std::abs(v - 2.0) < 1e-2);

  const Problem z = parse_problem("zakharov@10");
  const auto z1 = gradient_via_corcfd(*z.oracle, z.theta0, 100, cfg, rng);
  const auto z2 = gradient_via_corcfd(*z.oracle, z.theta0, 100, cfg, rng);
  CHECK(z1 == z2);
}

TEST_CASE("noise-free quadratic within 30 iterations") {
  const auto o = shifted_quadratic(4, 0.0);
  DfoConfig cfg;
  cfg.budget = 1'000'000;
  cfg.sigma = 0.0;
  cfg.injected = InjectedConstants{std::nullopt, 1e-30, 1.0};
  cfg.clamp_eps = 1e-30;
  const std::vector<double> x0{3.0, -1.0, 0.0, 2.0};
  const DfoTrace tr = corcfd_lbfgs(*o, x0, cfg, 2);
  std::size_t hit = tr.iterates.size();
  for (std::size_t i = 0; i < tr.iterates.size(); ++i) {
    double err = 0.0;
    for (double v : tr.iterates[i].theta) err = std::max(err, std::abs(v - 1.0));
    if (err <= 1e-4) {
      hit = i;
      break;
    }
  }
  CHECK(hit <= 30);
}
