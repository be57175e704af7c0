#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace corfd {

// Fit of mean ~ intercept + slope * h^2. intercept estimates alpha'(theta0),
// slope estimates the bias constant B.
struct BiasFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> residuals;  // means - fitted, unweighted
};

struct VarFit {
  double sigma2 = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e12;

// Rows divided by sds before an ordinary least-squares solve (QR). Throws a
// Numeric error when the weighted design's condition number exceeds 1e12.
BiasFit fit_bias_wls(std::span<const double> h, std::span<const double> means,
                     std::span<const double> sds);

// Regress h_k^2 s2_k on the constant (n_b - 1) / (2 n_b^2); the slope has the
// closed form (2 n_b^2 / (n_b - 1)) * mean_k(h_k^2 s2_k).
VarFit fit_var_wls(std::span<const double> h, std::span<const double> s2,
                   int n_b);

// Unweighted counterpart: regress s2_k on (n_b - 1) / (2 n_b^2 h_k^2). This is
// the estimator whose bias/variance constants are the H-hat/V-hat pair.
VarFit fit_var_ols(std::span<const double> h, std::span<const double> s2,
                   int n_b);

// Sign-preserving floor: sign(B) * (eps + max(|B| - eps, 0)), sign(0) = +1.
double clamp_bias_constant(double b_hat, double eps);

// Default clamp floor 1e-4 * max(1, |alpha'_hat|).
double default_clamp_epsilon(double alpha_hat);

// Residual-maker of the design with columns (1, c_k^2) and the scalars built
// from it.
struct Projection {
  Eigen::MatrixXd P;
  double lambda = 0.0;  // c^T P c^4
  double q = 0.0;       // || Diag(1/c) P c ||^2
  double cos_c = 0.0;   // cosine of the angle between c and span{1, c^2}
  double cos_c4 = 0.0;  // same for c^4
};

Projection projection_and_lambda(std::span<const double> c);

// Closed-form constants for the intercept/slope (tilde/plain) and the
// variance fit (hat), for fixed coefficients c.
struct TheoryConstants {
  double H = 0.0;        // bias constant of B_hat
  double V = 0.0;        // variance constant of B_hat
  double H_tilde = 0.0;  // bias constant of alpha'_hat
  double V_tilde = 0.0;  // variance constant of alpha'_hat
  double H_hat = 0.0;    // bias constant of sigma2_hat
  double V_hat = 0.0;    // variance constant of sigma2_hat
};

TheoryConstants theory_constants(std::span<const double> c, double D,
                                 double sigma_prime);

// Optimal CFD perturbation (sigma2 / (4 n B^2))^(1/6).
double optimal_perturbation(double sigma2, double B, long n);

}  // namespace corfd
