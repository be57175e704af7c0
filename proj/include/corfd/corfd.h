/* Cor-CFD stochastic gradient estimation and CorCFD-L-BFGS, C interface.
 *
 * All functions return a corfd_status. On failure the message is available
 * from corfd_last_error() until the next call on the same thread. Handles are
 * opaque and owned by the caller; release them with the matching destroy.
 * Budgets count sample pairs; one pair is two oracle evaluations. */
#ifndef CORFD_H
#define CORFD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CORFD_API __attribute__((visibility("default")))
#else
#define CORFD_API
#endif

typedef enum corfd_status {
  CORFD_OK = 0,
  CORFD_ERR_INVALID_ARGUMENT = 1,
  CORFD_ERR_NUMERIC = 2,
  CORFD_ERR_BUDGET = 3,
  CORFD_ERR_IO = 4,
  CORFD_ERR_MISSING_TRUTH = 5,
  CORFD_ERR_INTERNAL = 99
} corfd_status;

typedef enum corfd_method {
  CORFD_METHOD_TRA = 0,
  CORFD_METHOD_OPT = 1,
  CORFD_METHOD_BOOT = 2,
  CORFD_METHOD_COR = 3
} corfd_method;

typedef struct corfd_problem corfd_problem;
typedef struct corfd_dfo_trace corfd_dfo_trace;
typedef struct corfd_experiment corfd_experiment;
typedef struct corfd_bench_result corfd_bench_result;

CORFD_API const char* corfd_last_error(void);
CORFD_API const char* corfd_version(void);
CORFD_API const char* corfd_method_name(corfd_method m);
CORFD_API corfd_status corfd_parse_method(const char* name, corfd_method* out);

/* ---- problems ---------------------------------------------------------- */

/* Ids: sin1, sin2, sin1@<kappa>, poly@<theta0>, rosenbrock, zakharov@<d>,
 * queue@<lam>,<mu>,<N>,<arrival|service>[,<waiting|sojourn>]. */
CORFD_API corfd_status corfd_problem_create(const char* id, corfd_problem** out);
CORFD_API void corfd_problem_destroy(corfd_problem* p);
CORFD_API size_t corfd_problem_dim(const corfd_problem* p);
CORFD_API corfd_status corfd_problem_theta0(const corfd_problem* p, double* out,
                                            size_t len);

typedef struct corfd_truth {
  int has_deriv, has_bias_const, has_fifth_const, has_noise_var;
  double deriv, bias_const, fifth_const, noise_var;
} corfd_truth;

/* theta may be NULL for the problem's own point. */
CORFD_API corfd_status corfd_problem_truth(const corfd_problem* p, const double* theta,
                                           size_t coord, corfd_truth* out);
/* Noise-free objective; CORFD_ERR_MISSING_TRUTH when unknown. */
CORFD_API corfd_status corfd_problem_mean(const corfd_problem* p, const double* theta,
                                          double* out);
/* Known minimizer, for optimality/solution gaps. */
CORFD_API corfd_status corfd_problem_minimizer(const corfd_problem* p, double* out,
                                               size_t len);
/* One noisy draw Y(theta) from stream (seed, stream). */
CORFD_API corfd_status corfd_problem_eval(const corfd_problem* p, const double* theta,
                                          uint64_t seed, uint64_t stream, double* out);
/* Likelihood-ratio derivative for queue problems. */
CORFD_API corfd_status corfd_problem_reference_derivative(const corfd_problem* p,
                                                          long reps, uint64_t seed,
                                                          double* out);

/* ---- estimators -------------------------------------------------------- */

typedef struct corfd_estimator_config {
  int K;
  int n_b;             /* 0: derive from r */
  double r;
  int I;
  int bootstrap_exact; /* 0: Monte Carlo resampling, 1: closed form */
  double gamma;
  double mu0, sigma0, lower, upper; /* truncated-normal P0; upper may be inf */
  double clamp_eps;    /* <= 0: 1e-4 max(1, |alpha'|) */
  const double* coefficients; /* optional fixed c of length K */
  double tra_h;        /* > 0: fixed Tra-CFD h */
  double tra_B, tra_sigma2;
} corfd_estimator_config;

CORFD_API void corfd_estimator_config_default(corfd_estimator_config* cfg);

typedef struct corfd_gradient_estimate {
  double value;
  corfd_method method;
  long pairs_used;
  double perturbation;
  int has_constants;
  double alpha, B, B_raw, sigma2, h;
  long budget;
} corfd_gradient_estimate;

/* One estimate of d alpha / d theta_coord at theta (NULL: the problem's
 * point) with n pairs. Replication index rep selects the stream, matching
 * the bench harness. */
CORFD_API corfd_status corfd_estimate(const corfd_problem* p, const double* theta,
                                      size_t coord, corfd_method method, long n,
                                      const corfd_estimator_config* cfg, uint64_t seed,
                                      uint64_t rep, corfd_gradient_estimate* out);

CORFD_API corfd_status corfd_transform_pilot_sample(double delta, double h_k, double h_n,
                                                    double alpha, double B, double* out);

typedef struct corfd_r_sweep_row {
  double r;
  corfd_method method;
  int valid;
  double bias, variance, mse;
  long reps;
} corfd_r_sweep_row;

/* Writes 2 * n_r rows (cor then boot for each r) into rows. */
CORFD_API corfd_status corfd_r_sweep(const corfd_problem* p, size_t coord, long n,
                                     const double* r_grid, size_t n_r,
                                     const corfd_estimator_config* cfg, long reps,
                                     uint64_t seed, double truth,
                                     corfd_r_sweep_row* rows);

/* ---- regression diagnostics ------------------------------------------- */

typedef struct corfd_diagnostics {
  double lambda, q, cos_c, cos_c4;
  double H, V, H_tilde, V_tilde, H_hat, V_hat;
  double idempotency_error;  /* max |P^2 - P| */
  double symmetry_error;     /* max |P - P^T| */
  double annihilation_error; /* max(|P 1|, |P c^2|) */
} corfd_diagnostics;

CORFD_API corfd_status corfd_diagnostics_compute(const double* c, size_t K, double D,
                                                 double sigma_prime,
                                                 corfd_diagnostics* out);

typedef struct corfd_summary {
  double bias, variance, mse, mean, truth;
  long reps;
} corfd_summary;

CORFD_API corfd_status corfd_summarize(const double* estimates, size_t n, double truth,
                                       corfd_summary* out);

/* ---- CorCFD-L-BFGS ----------------------------------------------------- */

typedef struct corfd_dfo_config {
  long budget; /* T pairs */
  int K;
  long T0;
  double r;
  int I;
  int bootstrap_exact;
  double gamma;
  double mu0, sigma0, lower, upper;
  double l1, l2, a0, sigma;
  int max_backtracks;
  int armijo_plus_sign;
  int memory;
  double grad_tol;
  int tra_gradient; /* 1: one pair per coordinate (TraCFD-L-BFGS) */
  double tra_B, tra_sigma2;
  int inject_sigma2; /* 1: use sigma2 below instead of estimating it */
  double sigma2;
} corfd_dfo_config;

CORFD_API void corfd_dfo_config_default(corfd_dfo_config* cfg);

typedef enum corfd_dfo_stop {
  CORFD_DFO_BUDGET = 0,
  CORFD_DFO_SMALL_GRADIENT = 1,
  CORFD_DFO_NON_FINITE = 2,
  CORFD_DFO_ITERATION_CAP = 3
} corfd_dfo_stop;

typedef struct corfd_dfo_iterate {
  long k, t, oracle_calls, t_ls, batch;
  double step, f_noisy, slope;
  int has_f_true;
  double f_true;
  int ls_gave_up, memory_stored;
} corfd_dfo_iterate;

CORFD_API corfd_status corfd_dfo_run(const corfd_problem* p, const double* theta0,
                                     const corfd_dfo_config* cfg, uint64_t seed,
                                     corfd_dfo_trace** out);
CORFD_API void corfd_dfo_trace_destroy(corfd_dfo_trace* t);
CORFD_API size_t corfd_dfo_trace_size(const corfd_dfo_trace* t);
CORFD_API corfd_status corfd_dfo_trace_iterate(const corfd_dfo_trace* t, size_t i,
                                               corfd_dfo_iterate* out);
/* Copies theta_i (or the gradient) into out[0..dim). */
CORFD_API corfd_status corfd_dfo_trace_theta(const corfd_dfo_trace* t, size_t i,
                                             double* out, size_t len);
CORFD_API corfd_status corfd_dfo_trace_grad(const corfd_dfo_trace* t, size_t i,
                                            double* out, size_t len);
CORFD_API corfd_status corfd_dfo_trace_final(const corfd_dfo_trace* t, double* theta,
                                             size_t len, long* t_final, long* calls,
                                             corfd_dfo_stop* stop);

/* ---- replicated experiments ------------------------------------------- */

CORFD_API corfd_status corfd_experiment_create(corfd_experiment** out);
CORFD_API void corfd_experiment_destroy(corfd_experiment* e);
/* "key=value"; see the README for keys. */
CORFD_API corfd_status corfd_experiment_set(corfd_experiment* e, const char* assignment);
CORFD_API corfd_status corfd_experiment_load(corfd_experiment* e, const char* path);
CORFD_API corfd_status corfd_experiment_output(const corfd_experiment* e,
                                               const char** path);
CORFD_API corfd_status corfd_experiment_truth(const corfd_experiment* e, int* has_truth,
                                              double* truth);
CORFD_API corfd_status corfd_experiment_run(const corfd_experiment* e,
                                            corfd_bench_result** out);

typedef struct corfd_bench_cell {
  const char* problem; /* owned by the result */
  corfd_method method;
  long pairs;
  int ok;
  const char* error;   /* empty when ok */
  corfd_summary summary;
  long pairs_used_total;
} corfd_bench_cell;

CORFD_API void corfd_bench_result_destroy(corfd_bench_result* r);
CORFD_API size_t corfd_bench_result_size(const corfd_bench_result* r);
CORFD_API corfd_status corfd_bench_result_cell(const corfd_bench_result* r, size_t i,
                                               corfd_bench_cell* out);
/* Per-replication estimates and perturbations of cell i, len = reps. */
CORFD_API corfd_status corfd_bench_result_estimates(const corfd_bench_result* r,
                                                    size_t i, double* estimates,
                                                    double* perturbations, size_t len);
/* Summary CSV (problem,method,pairs,reps,bias,variance,mse); NULL path writes
 * to stdout. */
CORFD_API corfd_status corfd_bench_result_write_csv(const corfd_bench_result* r,
                                                    const char* path);

#ifdef __cplusplus
}
#endif

#endif /* CORFD_H */
