#include "corfd/corfd.h"

#include <cmath>
#include <iostream>
#include <limits>
#include <new>
#include <string>

#include "corfd/bench.hpp"
#include "corfd/dfo.hpp"
#include "corfd/error.hpp"
#include "corfd/estimators.hpp"
#include "corfd/oracle.hpp"
#include "corfd/regression.hpp"
#include "corfd/stats.hpp"

struct corfd_problem {
  corfd::Problem problem;
};

struct corfd_dfo_trace {
  corfd::DfoTrace trace;
};

struct corfd_experiment {
  corfd::ExperimentConfig cfg;
};

struct corfd_bench_result {
  std::vector<corfd::CellResult> cells;
};

namespace {

thread_local std::string g_last_error;

corfd_status set_error(corfd_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

corfd_status map_code(corfd::ErrorCode c) {
  switch (c) {
    case corfd::ErrorCode::InvalidArgument: return CORFD_ERR_INVALID_ARGUMENT;
    case corfd::ErrorCode::Numeric: return CORFD_ERR_NUMERIC;
    case corfd::ErrorCode::Budget: return CORFD_ERR_BUDGET;
    case corfd::ErrorCode::Io: return CORFD_ERR_IO;
    case corfd::ErrorCode::MissingTruth: return CORFD_ERR_MISSING_TRUTH;
  }
  return CORFD_ERR_INTERNAL;
}

template <class F>
corfd_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CORFD_OK;
  } catch (const corfd::Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(CORFD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(CORFD_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(CORFD_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  corfd::require(p != nullptr, std::string(what) + " must not be null");
}

corfd::Method to_method(corfd_method m) {
  switch (m) {
    case CORFD_METHOD_TRA: return corfd::Method::Tra;
    case CORFD_METHOD_OPT: return corfd::Method::Opt;
    case CORFD_METHOD_BOOT: return corfd::Method::Boot;
    case CORFD_METHOD_COR: return corfd::Method::Cor;
  }
  corfd::fail(corfd::ErrorCode::InvalidArgument, "unknown method");
}

corfd_method from_method(corfd::Method m) {
  switch (m) {
    case corfd::Method::Tra: return CORFD_METHOD_TRA;
    case corfd::Method::Opt: return CORFD_METHOD_OPT;
    case corfd::Method::Boot: return CORFD_METHOD_BOOT;
    case corfd::Method::Cor: return CORFD_METHOD_COR;
  }
  return CORFD_METHOD_COR;
}

corfd::EstimatorConfig to_estimator(const corfd_estimator_config* c) {
  corfd::EstimatorConfig e;
  if (!c) return e;
  e.K = c->K;
  e.n_b = c->n_b;
  e.r = c->r;
  e.I = c->I;
  e.bootstrap = c->bootstrap_exact ? corfd::BootstrapMode::Exact
                                   : corfd::BootstrapMode::MonteCarlo;
  e.gamma = c->gamma;
  e.p0 = {c->mu0, c->sigma0, c->lower, c->upper};
  e.clamp_eps = c->clamp_eps;
  if (c->coefficients)
    e.coefficients = std::vector<double>(c->coefficients, c->coefficients + c->K);
  e.tra_h = c->tra_h;
  e.tra_B = c->tra_B;
  e.tra_sigma2 = c->tra_sigma2;
  return e;
}

std::vector<double> point_or_default(const corfd_problem* p, const double* theta) {
  if (!theta) return p->problem.theta0;
  return std::vector<double>(theta, theta + p->problem.oracle->dim());
}

void fill_summary(const corfd::SummaryStats& s, corfd_summary* out) {
  out->bias = s.bias;
  out->variance = s.variance;
  out->mse = s.mse;
  out->mean = s.mean;
  out->truth = s.truth;
  out->reps = s.reps;
}

}  // namespace

extern "C" {

const char* corfd_last_error(void) { return g_last_error.c_str(); }

const char* corfd_version(void) { return "1.0.0"; }

const char* corfd_method_name(corfd_method m) {
  switch (m) {
    case CORFD_METHOD_TRA: return "tra";
    case CORFD_METHOD_OPT: return "opt";
    case CORFD_METHOD_BOOT: return "boot";
    case CORFD_METHOD_COR: return "cor";
  }
  return "?";
}

corfd_status corfd_parse_method(const char* name, corfd_method* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = from_method(corfd::parse_method(name));
  });
}

corfd_status corfd_problem_create(const char* id, corfd_problem** out) {
  return guarded([&] {
    need(id, "id");
    need(out, "out");
    *out = new corfd_problem{corfd::parse_problem(id)};
  });
}

void corfd_problem_destroy(corfd_problem* p) { delete p; }

size_t corfd_problem_dim(const corfd_problem* p) {
  return p ? p->problem.oracle->dim() : 0;
}

corfd_status corfd_problem_theta0(const corfd_problem* p, double* out, size_t len) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    corfd::require(len >= p->problem.theta0.size(), "output buffer too small");
    std::copy(p->problem.theta0.begin(), p->problem.theta0.end(), out);
  });
}

corfd_status corfd_problem_truth(const corfd_problem* p, const double* theta,
                                 size_t coord, corfd_truth* out) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    corfd::require(coord < p->problem.oracle->dim(), "coordinate out of range");
    const auto x = point_or_default(p, theta);
    const corfd::GroundTruth t = p->problem.oracle->truth(x, coord);
    *out = {};
    out->has_deriv = t.deriv.has_value();
    out->has_bias_const = t.bias_const.has_value();
    out->has_fifth_const = t.fifth_const.has_value();
    out->has_noise_var = t.noise_var.has_value();
    out->deriv = t.deriv.value_or(0.0);
    out->bias_const = t.bias_const.value_or(0.0);
    out->fifth_const = t.fifth_const.value_or(0.0);
    out->noise_var = t.noise_var.value_or(0.0);
  });
}

corfd_status corfd_problem_mean(const corfd_problem* p, const double* theta, double* out) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    const auto m = p->problem.oracle->mean(point_or_default(p, theta));
    if (!m) corfd::fail(corfd::ErrorCode::MissingTruth, "no closed-form mean");
    *out = *m;
  });
}

corfd_status corfd_problem_minimizer(const corfd_problem* p, double* out, size_t len) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    const auto m = p->problem.oracle->minimizer();
    if (!m) corfd::fail(corfd::ErrorCode::MissingTruth, "no known minimizer");
    corfd::require(len >= m->size(), "output buffer too small");
    std::copy(m->begin(), m->end(), out);
  });
}

corfd_status corfd_problem_eval(const corfd_problem* p, const double* theta,
                                uint64_t seed, uint64_t stream, double* out) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    corfd::RngStream rng(seed, stream);
    *out = p->problem.oracle->eval(point_or_default(p, theta), rng);
  });
}

corfd_status corfd_problem_reference_derivative(const corfd_problem* p, long reps,
                                                uint64_t seed, double* out) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    if (!p->problem.reference_derivative)
      corfd::fail(corfd::ErrorCode::MissingTruth, "problem has no reference derivative");
    corfd::require(reps >= 1, "reps must be >= 1");
    corfd::RngStream rng(seed, 0xfeed);
    *out = p->problem.reference_derivative(reps, rng);
  });
}

void corfd_estimator_config_default(corfd_estimator_config* cfg) {
  if (!cfg) return;
  const corfd::EstimatorConfig e;
  *cfg = {};
  cfg->K = e.K;
  cfg->n_b = e.n_b;
  cfg->r = e.r;
  cfg->I = e.I;
  cfg->bootstrap_exact = 0;
  cfg->gamma = e.gamma;
  cfg->mu0 = e.p0.mu0;
  cfg->sigma0 = e.p0.sigma0;
  cfg->lower = e.p0.lower;
  cfg->upper = e.p0.upper;
  cfg->clamp_eps = e.clamp_eps;
  cfg->coefficients = nullptr;
  cfg->tra_h = e.tra_h;
  cfg->tra_B = e.tra_B;
  cfg->tra_sigma2 = e.tra_sigma2;
}

corfd_status corfd_estimate(const corfd_problem* p, const double* theta, size_t coord,
                            corfd_method method, long n,
                            const corfd_estimator_config* cfg, uint64_t seed,
                            uint64_t rep, corfd_gradient_estimate* out) {
  return guarded([&] {
    need(p, "problem");
    need(out, "out");
    corfd::require(coord < p->problem.oracle->dim(), "coordinate out of range");
    const auto x = point_or_default(p, theta);
    corfd::RngStream rng = corfd::RngStream(seed, 0).substream(
        corfd::stream_tag::indexed(corfd::stream_tag::kReplication, rep));
    const corfd::GradientEstimate g = corfd::estimate(
        to_method(method), *p->problem.oracle, x, coord, n, to_estimator(cfg), rng);
    *out = {};
    out->value = g.value;
    out->method = from_method(g.method);
    out->pairs_used = g.pairs_used;
    out->perturbation = g.perturbation;
    if (g.constants) {
      out->has_constants = 1;
      out->alpha = g.constants->alpha;
      out->B = g.constants->B;
      out->B_raw = g.constants->B_raw;
      out->sigma2 = g.constants->sigma2;
      out->h = g.constants->h;
      out->budget = g.constants->budget;
    }
  });
}

corfd_status corfd_transform_pilot_sample(double delta, double h_k, double h_n,
                                          double alpha, double B, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = corfd::transform_pilot_sample(delta, h_k, h_n, alpha, B);
  });
}

corfd_status corfd_r_sweep(const corfd_problem* p, size_t coord, long n,
                           const double* r_grid, size_t n_r,
                           const corfd_estimator_config* cfg, long reps, uint64_t seed,
                           double truth, corfd_r_sweep_row* rows) {
  return guarded([&] {
    need(p, "problem");
    need(r_grid, "r_grid");
    need(rows, "rows");
    const auto res = corfd::r_sweep(*p->problem.oracle, p->problem.theta0, coord, n,
                                    std::span<const double>(r_grid, n_r),
                                    to_estimator(cfg), reps, seed, truth);
    for (std::size_t i = 0; i < res.size(); ++i) {
      rows[i].r = res[i].r;
      rows[i].method = from_method(res[i].method);
      rows[i].valid = res[i].valid;
      rows[i].bias = res[i].bias;
      rows[i].variance = res[i].variance;
      rows[i].mse = res[i].mse;
      rows[i].reps = res[i].reps;
    }
  });
}

corfd_status corfd_diagnostics_compute(const double* c, size_t K, double D,
                                       double sigma_prime, corfd_diagnostics* out) {
  return guarded([&] {
    need(c, "c");
    need(out, "out");
    const std::span<const double> cs(c, K);
    const corfd::Projection pr = corfd::projection_and_lambda(cs);
    const corfd::TheoryConstants tc = corfd::theory_constants(cs, D, sigma_prime);
    *out = {};
    out->lambda = pr.lambda;
    out->q = pr.q;
    out->cos_c = pr.cos_c;
    out->cos_c4 = pr.cos_c4;
    out->H = tc.H;
    out->V = tc.V;
    out->H_tilde = tc.H_tilde;
    out->V_tilde = tc.V_tilde;
    out->H_hat = tc.H_hat;
    out->V_hat = tc.V_hat;
    const Eigen::Index k = Eigen::Index(K);
    out->idempotency_error = (pr.P * pr.P - pr.P).cwiseAbs().maxCoeff();
    out->symmetry_error = (pr.P - pr.P.transpose()).cwiseAbs().maxCoeff();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(k), c2(k);
    for (Eigen::Index i = 0; i < k; ++i) c2(i) = c[i] * c[i];
    out->annihilation_error = std::max((pr.P * ones).cwiseAbs().maxCoeff(),
                                       (pr.P * c2).cwiseAbs().maxCoeff());
  });
}

corfd_status corfd_summarize(const double* estimates, size_t n, double truth,
                             corfd_summary* out) {
  return guarded([&] {
    need(estimates, "estimates");
    need(out, "out");
    fill_summary(corfd::summarize(std::span<const double>(estimates, n), truth), out);
  });
}

void corfd_dfo_config_default(corfd_dfo_config* cfg) {
  if (!cfg) return;
  const corfd::DfoConfig d;
  *cfg = {};
  cfg->budget = 1000;
  cfg->K = d.K;
  cfg->T0 = d.T0;
  cfg->r = d.r;
  cfg->I = d.I;
  cfg->bootstrap_exact = 0;
  cfg->gamma = d.gamma;
  cfg->mu0 = d.p0.mu0;
  cfg->sigma0 = d.p0.sigma0;
  cfg->lower = d.p0.lower;
  cfg->upper = d.p0.upper;
  cfg->l1 = d.l1;
  cfg->l2 = d.l2;
  cfg->a0 = d.a0;
  cfg->sigma = d.sigma;
  cfg->max_backtracks = d.max_backtracks;
  cfg->armijo_plus_sign = 0;
  cfg->memory = d.memory;
  cfg->grad_tol = d.grad_tol;
  cfg->tra_gradient = 0;
  cfg->tra_B = d.tra_B;
  cfg->tra_sigma2 = d.tra_sigma2;
  cfg->inject_sigma2 = 0;
  cfg->sigma2 = 1.0;
}

corfd_status corfd_dfo_run(const corfd_problem* p, const double* theta0,
                           const corfd_dfo_config* cfg, uint64_t seed,
                           corfd_dfo_trace** out) {
  return guarded([&] {
    need(p, "problem");
    need(cfg, "config");
    need(out, "out");
    corfd::DfoConfig d;
    d.budget = cfg->budget;
    d.K = cfg->K;
    d.T0 = cfg->T0;
    d.r = cfg->r;
    d.I = cfg->I;
    d.bootstrap = cfg->bootstrap_exact ? corfd::BootstrapMode::Exact
                                       : corfd::BootstrapMode::MonteCarlo;
    d.gamma = cfg->gamma;
    d.p0 = {cfg->mu0, cfg->sigma0, cfg->lower, cfg->upper};
    d.l1 = cfg->l1;
    d.l2 = cfg->l2;
    d.a0 = cfg->a0;
    d.sigma = cfg->sigma;
    d.max_backtracks = cfg->max_backtracks;
    d.armijo_plus_sign = cfg->armijo_plus_sign != 0;
    d.memory = cfg->memory;
    d.grad_tol = cfg->grad_tol;
    d.gradient = cfg->tra_gradient ? corfd::GradientMethod::Tra : corfd::GradientMethod::Cor;
    d.tra_B = cfg->tra_B;
    d.tra_sigma2 = cfg->tra_sigma2;
    if (cfg->inject_sigma2) d.injected = corfd::InjectedConstants{{}, {}, cfg->sigma2};
    const auto x = point_or_default(p, theta0);
    *out = new corfd_dfo_trace{corfd::corcfd_lbfgs(*p->problem.oracle, x, d, seed)};
  });
}

void corfd_dfo_trace_destroy(corfd_dfo_trace* t) { delete t; }

size_t corfd_dfo_trace_size(const corfd_dfo_trace* t) {
  return t ? t->trace.iterates.size() : 0;
}

corfd_status corfd_dfo_trace_iterate(const corfd_dfo_trace* t, size_t i,
                                     corfd_dfo_iterate* out) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    corfd::require(i < t->trace.iterates.size(), "iterate index out of range");
    const corfd::DfoIterate& it = t->trace.iterates[i];
    *out = {};
    out->k = it.k;
    out->t = it.t;
    out->oracle_calls = it.oracle_calls;
    out->t_ls = it.t_ls;
    out->batch = it.batch;
    out->step = it.step;
    out->f_noisy = it.f_noisy;
    out->slope = it.slope;
    out->has_f_true = it.f_true.has_value();
    out->f_true = it.f_true.value_or(std::numeric_limits<double>::quiet_NaN());
    out->ls_gave_up = it.ls_gave_up;
    out->memory_stored = it.memory_stored;
  });
}

corfd_status corfd_dfo_trace_theta(const corfd_dfo_trace* t, size_t i, double* out,
                                   size_t len) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    corfd::require(i < t->trace.iterates.size(), "iterate index out of range");
    const auto& v = t->trace.iterates[i].theta;
    corfd::require(len >= v.size(), "output buffer too small");
    std::copy(v.begin(), v.end(), out);
  });
}

corfd_status corfd_dfo_trace_grad(const corfd_dfo_trace* t, size_t i, double* out,
                                  size_t len) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    corfd::require(i < t->trace.iterates.size(), "iterate index out of range");
    const auto& v = t->trace.iterates[i].grad;
    corfd::require(len >= v.size(), "output buffer too small");
    std::copy(v.begin(), v.end(), out);
  });
}

corfd_status corfd_dfo_trace_final(const corfd_dfo_trace* t, double* theta, size_t len,
                                   long* t_final, long* calls, corfd_dfo_stop* stop) {
  return guarded([&] {
    need(t, "trace");
    if (theta) {
      corfd::require(len >= t->trace.theta_final.size(), "output buffer too small");
      std::copy(t->trace.theta_final.begin(), t->trace.theta_final.end(), theta);
    }
    if (t_final) *t_final = t->trace.t;
    if (calls) *calls = t->trace.oracle_calls;
    if (stop) *stop = corfd_dfo_stop(int(t->trace.stop));
  });
}

corfd_status corfd_experiment_create(corfd_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = new corfd_experiment{};
  });
}

void corfd_experiment_destroy(corfd_experiment* e) { delete e; }

corfd_status corfd_experiment_set(corfd_experiment* e, const char* assignment) {
  return guarded([&] {
    need(e, "experiment");
    need(assignment, "assignment");
    corfd::apply_setting(e->cfg, assignment);
  });
}

corfd_status corfd_experiment_load(corfd_experiment* e, const char* path) {
  return guarded([&] {
    need(e, "experiment");
    need(path, "path");
    e->cfg = corfd::load_experiment_config(path);
  });
}

corfd_status corfd_experiment_output(const corfd_experiment* e, const char** path) {
  return guarded([&] {
    need(e, "experiment");
    need(path, "path");
    *path = e->cfg.output.c_str();
  });
}

corfd_status corfd_experiment_truth(const corfd_experiment* e, int* has_truth,
                                    double* truth) {
  return guarded([&] {
    need(e, "experiment");
    need(has_truth, "has_truth");
    need(truth, "truth");
    const auto t = corfd::resolve_truth(e->cfg);
    *has_truth = t.has_value();
    *truth = t.value_or(0.0);
  });
}

corfd_status corfd_experiment_run(const corfd_experiment* e, corfd_bench_result** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = new corfd_bench_result{corfd::run_replications(e->cfg)};
  });
}

void corfd_bench_result_destroy(corfd_bench_result* r) { delete r; }

size_t corfd_bench_result_size(const corfd_bench_result* r) {
  return r ? r->cells.size() : 0;
}

corfd_status corfd_bench_result_cell(const corfd_bench_result* r, size_t i,
                                     corfd_bench_cell* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    corfd::require(i < r->cells.size(), "cell index out of range");
    const corfd::CellResult& c = r->cells[i];
    *out = {};
    out->problem = c.problem.c_str();
    out->method = from_method(c.method);
    out->pairs = c.pairs;
    out->ok = c.ok;
    out->error = c.error.c_str();
    fill_summary(c.stats, &out->summary);
    out->pairs_used_total = c.pairs_used_total;
  });
}

corfd_status corfd_bench_result_estimates(const corfd_bench_result* r, size_t i,
                                          double* estimates, double* perturbations,
                                          size_t len) {
  return guarded([&] {
    need(r, "result");
    corfd::require(i < r->cells.size(), "cell index out of range");
    const corfd::CellResult& c = r->cells[i];
    corfd::require(len >= c.estimates.size(), "output buffer too small");
    if (estimates) std::copy(c.estimates.begin(), c.estimates.end(), estimates);
    if (perturbations)
      std::copy(c.perturbations.begin(), c.perturbations.end(), perturbations);
  });
}

corfd_status corfd_bench_result_write_csv(const corfd_bench_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    const auto rows = corfd::summary_rows(r->cells);
    const std::vector<std::string> comments{corfd::kVarianceConvention};
    if (path && *path)
      corfd::emit_csv(std::string(path), corfd::summary_header(), rows, comments);
    else
      corfd::emit_csv(std::cout, corfd::summary_header(), rows, comments);
  });
}

}  // extern "C"
