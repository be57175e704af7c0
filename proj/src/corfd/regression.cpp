#include "corfd/regression.hpp"

#include <algorithm>
#include <cmath>

#include "corfd/error.hpp"

namespace corfd {

namespace {

void check_distinct_squares(std::span<const double> h) {
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j)
      require(h[i] * h[i] != h[j] * h[j], "perturbations need distinct h^2");
}

}  // namespace

BiasFit fit_bias_wls(std::span<const double> h, std::span<const double> means,
                     std::span<const double> sds) {
  const std::size_t K = h.size();
  require(K >= 2, "bias regression needs K >= 2 points");
  require(means.size() == K && sds.size() == K, "regression inputs differ in length");
  check_distinct_squares(h);

  Eigen::MatrixXd X(K, 2);
  Eigen::VectorXd y(K);
  for (std::size_t k = 0; k < K; ++k) {
    require(std::isfinite(sds[k]) && sds[k] > 0.0, "regression sds must be positive");
    const double w = 1.0 / sds[k];
    X(Eigen::Index(k), 0) = w;
    X(Eigen::Index(k), 1) = w * h[k] * h[k];
    y(Eigen::Index(k)) = w * means[k];
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 0.0) || sv(0) / sv(1) > kMaxConditionNumber)
    fail(ErrorCode::Numeric, "bias regression design is numerically singular");

  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  BiasFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.residuals.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    fit.residuals[k] = means[k] - (fit.intercept + fit.slope * h[k] * h[k]);
  return fit;
}

VarFit fit_var_wls(std::span<const double> h, std::span<const double> s2,
                   int n_b) {
  require(!h.empty(), "variance regression needs K >= 1 points");
  require(s2.size() == h.size(), "regression inputs differ in length");
  require(n_b >= 2, "pilot size n_b must be >= 2");
  double acc = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * h[k] * s2[k];
  const double nb = double(n_b);
  return {2.0 * nb * nb / (nb - 1.0) * acc / double(h.size())};
}

VarFit fit_var_ols(std::span<const double> h, std::span<const double> s2,
                   int n_b) {
  require(!h.empty(), "variance regression needs K >= 1 points");
  require(s2.size() == h.size(), "regression inputs differ in length");
  require(n_b >= 2, "pilot size n_b must be >= 2");
  const double nb = double(n_b);
  double xy = 0.0;
  double xx = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    require(h[k] != 0.0, "perturbations must be nonzero");
    const double x = (nb - 1.0) / (2.0 * nb * nb * h[k] * h[k]);
    xy += x * s2[k];
    xx += x * x;
  }
  return {xy / xx};
}

double clamp_bias_constant(double b_hat, double eps) {
  require(eps > 0.0, "clamp epsilon must be positive");
  const double sign = b_hat < 0.0 ? -1.0 : 1.0;
  return sign * (eps + std::max(std::abs(b_hat) - eps, 0.0));
}

double default_clamp_epsilon(double alpha_hat) {
  return 1e-4 * std::max(1.0, std::abs(alpha_hat));
}

Projection projection_and_lambda(std::span<const double> c) {
  const std::size_t K = c.size();
  require(K >= 2, "projection needs K >= 2 coefficients");
  Eigen::VectorXd a(K), a4(K);
  Eigen::MatrixXd X(K, 2);
  for (std::size_t k = 0; k < K; ++k) {
    require(c[k] != 0.0 && std::isfinite(c[k]), "coefficients must be nonzero");
    const double v = std::abs(c[k]);
    a(Eigen::Index(k)) = v;
    a4(Eigen::Index(k)) = v * v * v * v;
    X(Eigen::Index(k), 0) = 1.0;
    X(Eigen::Index(k), 1) = v * v;
  }
  check_distinct_squares(c);

  // Orthonormal basis Q of col(X); P = I - Q Q^T.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  if (std::abs(R(1, 1)) <= 1e-12 * std::abs(R(0, 0)))
    fail(ErrorCode::Numeric, "projection design is singular");
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(Eigen::Index(K), 2);

  Projection out;
  out.P = Eigen::MatrixXd::Identity(Eigen::Index(K), Eigen::Index(K)) - Q * Q.transpose();
  const Eigen::VectorXd Pc = out.P * a;
  out.lambda = a.dot(out.P * a4);
  out.q = Pc.cwiseQuotient(a).squaredNorm();
  out.cos_c = (Q.transpose() * a).norm() / a.norm();
  out.cos_c4 = (Q.transpose() * a4).norm() / a4.norm();
  return out;
}

TheoryConstants theory_constants(std::span<const double> c, double D,
                                 double sigma_prime) {
  const std::size_t K = c.size();
  require(K >= 1, "need at least one coefficient");
  double s2 = 0, s4 = 0, s6 = 0, inv2 = 0, inv4 = 0, inv8 = 0;
  for (double v : c) {
    require(v != 0.0 && std::isfinite(v), "coefficients must be nonzero");
    const double v2 = v * v;
    s2 += v2;
    s4 += v2 * v2;
    s6 += v2 * v2 * v2;
    inv2 += 1.0 / v2;
    inv4 += 1.0 / (v2 * v2);
    inv8 += 1.0 / (v2 * v2 * v2 * v2);
  }
  const double k = double(K);

  TheoryConstants t;
  t.H_hat = sigma_prime * sigma_prime * inv2 / inv4;
  t.V_hat = inv8 / (inv4 * inv4);
  if (K >= 2) {
    const double den = k * s4 - s2 * s2;
    if (!(std::abs(den) > 1e-14 * k * s4))
      fail(ErrorCode::Numeric, "collinear design: K sum c^4 = (sum c^2)^2");
    t.H = (k * D * s6 - s2 * D * s4) / den;
    t.V = (-k * k * s2 + s2 * s2 * inv2) / (den * den);
    t.H_tilde = (s4 * D * s4 - s2 * D * s6) / den;
    t.V_tilde = (s2 * s2 * s2 - 2.0 * k * s4 * s2 + s4 * s4 * inv2) / (den * den);
  }
  return t;
}

double optimal_perturbation(double sigma2, double B, long n) {
  require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma^2 must be positive");
  require(B != 0.0 && std::isfinite(B), "bias constant must be nonzero");
  require(n >= 1, "budget must be >= 1");
  return std::pow(sigma2 / (4.0 * double(n) * B * B), 1.0 / 6.0);
}

}  // namespace corfd
