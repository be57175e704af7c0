// corfd: command-line front end over the C API.
//   corfd estimate --problem poly@3 --method cor --pairs 10000 --reps 1000
//   corfd dfo --problem zakharov@10 --budget 100000 --seed 1
//   corfd bench --config table2.cfg --set reps=200
//   corfd diag --c 1,1.5,2,2.5 --D 0.1
//
// Exit codes: 0 success, 1 configuration error, 2 a run or cell failed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corfd/corfd.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;

struct ExitError {
  int code;
  std::string message;
};

bool is_config_error(corfd_status s) {
  return s == CORFD_ERR_INVALID_ARGUMENT || s == CORFD_ERR_IO;
}

void check(corfd_status s, const char* what) {
  if (s == CORFD_OK) return;
  throw ExitError{is_config_error(s) ? kExitConfig : kExitRun,
                  std::string(what) + ": " + corfd_last_error()};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Output sink: a file when a path is given, else stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ExitError{kExitConfig, "cannot write " + path};
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

using ProblemPtr = std::unique_ptr<corfd_problem, decltype(&corfd_problem_destroy)>;

ProblemPtr open_problem(const std::string& id) {
  corfd_problem* p = nullptr;
  check(corfd_problem_create(id.c_str(), &p), "problem");
  return ProblemPtr(p, &corfd_problem_destroy);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ExitError{kExitConfig, "bad number in list: '" + item + "'"};
    }
  }
  return out;
}

// ---- estimate --------------------------------------------------------------

struct EstimateArgs {
  std::string problem;
  std::string method = "cor";
  long pairs = 1000;
  long reps = 1000;
  double r = 1.0;
  int K = 10;
  int I = 1000;
  std::string bootstrap = "mc";
  unsigned long long seed = 1;
  double h = 0.0;
  std::string out;
};

int run_estimate(const EstimateArgs& a) {
  corfd_experiment* raw = nullptr;
  check(corfd_experiment_create(&raw), "experiment");
  std::unique_ptr<corfd_experiment, decltype(&corfd_experiment_destroy)> exp(
      raw, &corfd_experiment_destroy);
  const std::vector<std::string> settings{
      "problem=" + a.problem, "methods=" + a.method,
      "budgets=" + std::to_string(a.pairs), "reps=" + std::to_string(a.reps),
      "r=" + fmt(a.r), "K=" + std::to_string(a.K), "I=" + std::to_string(a.I),
      "bootstrap=" + a.bootstrap, "seed=" + std::to_string(a.seed),
      "tra_h=" + fmt(a.h)};
  for (const auto& s : settings) check(corfd_experiment_set(exp.get(), s.c_str()), "option");

  corfd_bench_result* rr = nullptr;
  check(corfd_experiment_run(exp.get(), &rr), "run");
  std::unique_ptr<corfd_bench_result, decltype(&corfd_bench_result_destroy)> res(
      rr, &corfd_bench_result_destroy);
  corfd_bench_cell cell;
  check(corfd_bench_result_cell(res.get(), 0, &cell), "result");

  // A problem without ground truth still prints its estimates, just no summary.
  const bool missing_truth =
      !cell.ok && std::string(cell.error).find("no ground truth") != std::string::npos;
  if (!cell.ok && !missing_truth) throw ExitError{kExitRun, cell.error};
  std::vector<double> est(static_cast<std::size_t>(a.reps));
  std::vector<double> hs(est.size());
  check(corfd_bench_result_estimates(res.get(), 0, est.data(), hs.data(), est.size()),
        "estimates");

  Sink sink(a.out);
  std::ostream& os = sink.out();
  os << "rep,estimate,pairs_used,perturbation\n";
  for (std::size_t i = 0; i < est.size(); ++i)
    os << i << ',' << fmt(est[i]) << ',' << a.pairs << ',' << fmt(hs[i]) << '\n';
  if (cell.ok) {
    os << "# summary: variance uses denominator R, mse = bias^2 + variance\n";
    os << "# bias,variance,mse\n";
    os << "# " << fmt(cell.summary.bias) << ',' << fmt(cell.summary.variance) << ','
       << fmt(cell.summary.mse) << '\n';
  }
  return 0;
}

// ---- dfo -------------------------------------------------------------------

struct DfoArgs {
  std::string problem;
  long budget = 0;
  int K = 5;
  long T0 = 20;
  int I = 100;
  double l1 = 1e-4, l2 = 0.5, a0 = 1.0, sigma = 1.0;
  int memory = 10;
  bool tra = false;
  bool plus_sign = false;
  unsigned long long seed = 1;
  std::string out;
};

int run_dfo(const DfoArgs& a) {
  ProblemPtr p = open_problem(a.problem);
  corfd_dfo_config cfg;
  corfd_dfo_config_default(&cfg);
  cfg.budget = a.budget;
  cfg.K = a.K;
  cfg.T0 = a.T0;
  cfg.I = a.I;
  cfg.l1 = a.l1;
  cfg.l2 = a.l2;
  cfg.a0 = a.a0;
  cfg.sigma = a.sigma;
  cfg.memory = a.memory;
  cfg.tra_gradient = a.tra;
  cfg.armijo_plus_sign = a.plus_sign;

  corfd_dfo_trace* raw = nullptr;
  check(corfd_dfo_run(p.get(), nullptr, &cfg, a.seed, &raw), "dfo");
  std::unique_ptr<corfd_dfo_trace, decltype(&corfd_dfo_trace_destroy)> trace(
      raw, &corfd_dfo_trace_destroy);

  Sink sink(a.out);
  std::ostream& os = sink.out();
  os << "k,t,oracle_calls,a_k,T_k,f_noisy,f_true\n";
  for (std::size_t i = 0; i < corfd_dfo_trace_size(trace.get()); ++i) {
    corfd_dfo_iterate it;
    check(corfd_dfo_trace_iterate(trace.get(), i, &it), "trace");
    os << it.k << ',' << it.t << ',' << it.oracle_calls << ',' << fmt(it.step) << ','
       << it.batch << ',' << fmt(it.f_noisy) << ','
       << (it.has_f_true ? fmt(it.f_true) : std::string()) << '\n';
  }

  const std::size_t d = corfd_problem_dim(p.get());
  std::vector<double> theta(d), star(d);
  long t = 0, calls = 0;
  corfd_dfo_stop stop;
  check(corfd_dfo_trace_final(trace.get(), theta.data(), d, &t, &calls, &stop), "trace");
  os << "# t=" << t << " oracle_calls=" << calls << " stop=" << int(stop) << '\n';
  if (corfd_problem_minimizer(p.get(), star.data(), d) == CORFD_OK) {
    double sg = 0.0;
    for (std::size_t i = 0; i < d; ++i) sg += (theta[i] - star[i]) * (theta[i] - star[i]);
    double f = 0.0, fstar = 0.0;
    check(corfd_problem_mean(p.get(), theta.data(), &f), "objective");
    check(corfd_problem_mean(p.get(), star.data(), &fstar), "objective");
    os << "# SG=" << fmt(std::sqrt(sg)) << " OG=" << fmt(f - fstar) << '\n';
  }
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string r_grid;
  std::string out;
};

int run_r_sweep(corfd_experiment* exp, const BenchArgs& a);

int run_bench(const BenchArgs& a) {
  corfd_experiment* raw = nullptr;
  check(corfd_experiment_create(&raw), "experiment");
  std::unique_ptr<corfd_experiment, decltype(&corfd_experiment_destroy)> exp(
      raw, &corfd_experiment_destroy);
  if (!a.config.empty()) check(corfd_experiment_load(exp.get(), a.config.c_str()), "config");
  for (const auto& s : a.sets) check(corfd_experiment_set(exp.get(), s.c_str()), "option");
  if (!a.out.empty())
    check(corfd_experiment_set(exp.get(), ("output=" + a.out).c_str()), "option");
  if (!a.r_grid.empty()) return run_r_sweep(exp.get(), a);

  corfd_bench_result* rr = nullptr;
  check(corfd_experiment_run(exp.get(), &rr), "run");
  std::unique_ptr<corfd_bench_result, decltype(&corfd_bench_result_destroy)> res(
      rr, &corfd_bench_result_destroy);
  const char* path = nullptr;
  check(corfd_experiment_output(exp.get(), &path), "output");
  check(corfd_bench_result_write_csv(res.get(), path), "write");

  int code = 0;
  for (std::size_t i = 0; i < corfd_bench_result_size(res.get()); ++i) {
    corfd_bench_cell cell;
    check(corfd_bench_result_cell(res.get(), i, &cell), "result");
    if (!cell.ok) {
      std::cerr << "cell " << cell.problem << ' ' << corfd_method_name(cell.method) << ' '
                << cell.pairs << " failed: " << cell.error << '\n';
      code = kExitRun;
    }
  }
  return code;
}

// The r sweep reuses the experiment settings: problem, the first budget,
// reps, seed and the estimator keys.
int run_r_sweep(corfd_experiment* exp, const BenchArgs& a) {
  std::string problem = "sin1", budget = "1000", reps = "1000", seed = "1";
  corfd_estimator_config ec;
  corfd_estimator_config_default(&ec);
  std::vector<double> coefficients;
  auto source = [&](const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) return;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "problem") problem = v;
    else if (k == "budgets") budget = v.substr(0, v.find(','));
    else if (k == "reps") reps = v;
    else if (k == "seed") seed = v;
    else if (k == "K") ec.K = std::stoi(v);
    else if (k == "I") ec.I = std::stoi(v);
    else if (k == "bootstrap") ec.bootstrap_exact = v == "exact";
    else if (k == "gamma") ec.gamma = std::stod(v);
  };
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    std::string line;
    while (std::getline(in, line)) source(line.substr(0, line.find('#')));
  }
  for (const auto& s : a.sets) source(s);

  ProblemPtr p = open_problem(problem);
  int has_truth = 0;
  double truth = 0.0;
  check(corfd_experiment_set(exp, ("problem=" + problem).c_str()), "option");
  check(corfd_experiment_truth(exp, &has_truth, &truth), "truth");
  if (!has_truth) throw ExitError{kExitRun, "no ground truth for " + problem};

  const std::vector<double> grid = parse_list(a.r_grid);
  std::vector<corfd_r_sweep_row> rows(2 * grid.size());
  check(corfd_r_sweep(p.get(), 0, std::stol(budget), grid.data(), grid.size(), &ec,
                      std::stol(reps), std::stoull(seed), truth, rows.data()),
        "r sweep");
  Sink sink(a.out);
  std::ostream& os = sink.out();
  os << "# variance uses denominator R (population form), so mse = bias^2 + variance\n";
  os << "problem,method,pairs,r,valid,reps,bias,variance,mse\n";
  for (const auto& r : rows)
    os << problem << ',' << corfd_method_name(r.method) << ',' << budget << ',' << fmt(r.r)
       << ',' << r.valid << ',' << r.reps << ',' << fmt(r.bias) << ',' << fmt(r.variance)
       << ',' << fmt(r.mse) << '\n';
  return 0;
}

// ---- diag ------------------------------------------------------------------

struct DiagArgs {
  std::string c;
  double D = 0.0;
  double sigma_prime = 0.0;
  std::string out;
};

int run_diag(const DiagArgs& a) {
  const std::vector<double> c = parse_list(a.c);
  corfd_diagnostics d;
  check(corfd_diagnostics_compute(c.data(), c.size(), a.D, a.sigma_prime, &d), "diag");
  Sink sink(a.out);
  std::ostream& os = sink.out();
  os << "K,lambda,q,cos_c,cos_c4,idempotency_error,symmetry_error,annihilation_error,"
        "H,V,H_tilde,V_tilde,H_hat,V_hat\n";
  os << c.size() << ',' << fmt(d.lambda) << ',' << fmt(d.q) << ',' << fmt(d.cos_c) << ','
     << fmt(d.cos_c4) << ',' << fmt(d.idempotency_error) << ',' << fmt(d.symmetry_error)
     << ',' << fmt(d.annihilation_error) << ',' << fmt(d.H) << ',' << fmt(d.V) << ','
     << fmt(d.H_tilde) << ',' << fmt(d.V_tilde) << ',' << fmt(d.H_hat) << ','
     << fmt(d.V_hat) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cor-CFD gradient estimation and CorCFD-L-BFGS"};
  app.require_subcommand(1);

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "replicated gradient estimates");
  est->set_help_flag("--help", "print help");
  est->add_option("--problem", ea.problem, "problem id")->required();
  est->add_option("--method", ea.method, "tra|opt|boot|cor");
  est->add_option("--pairs", ea.pairs, "budget n in sample pairs");
  est->add_option("--reps", ea.reps, "replications");
  est->add_option("--r", ea.r, "pilot fraction K n_b / n");
  est->add_option("--K", ea.K, "number of pilot perturbations");
  est->add_option("--I", ea.I, "bootstrap replicates");
  est->add_option("--bootstrap", ea.bootstrap, "mc|exact");
  est->add_option("--seed", ea.seed, "seed");
  est->add_option("--h", ea.h, "fixed Tra-CFD perturbation");
  est->add_option("--out", ea.out, "CSV path (default stdout)");

  DfoArgs da;
  auto* dfo = app.add_subcommand("dfo", "CorCFD-L-BFGS run");
  dfo->add_option("--problem", da.problem, "problem id")->required();
  dfo->add_option("--budget", da.budget, "total sample pairs T")->required();
  dfo->add_option("--K", da.K, "pilot perturbations per coordinate");
  dfo->add_option("--T0", da.T0, "initial batch per coordinate");
  dfo->add_option("--I", da.I, "bootstrap replicates");
  dfo->add_option("--l1", da.l1, "Armijo sufficient-decrease constant");
  dfo->add_option("--l2", da.l2, "backtracking factor");
  dfo->add_option("--a0", da.a0, "initial step");
  dfo->add_option("--sigma", da.sigma, "noise bound in the Armijo test");
  dfo->add_option("--memory", da.memory, "L-BFGS memory");
  dfo->add_flag("--tra", da.tra, "one-pair TraCFD gradients");
  dfo->add_flag("--armijo-plus-sign", da.plus_sign, "use + l1 a g'Hg in the Armijo test");
  dfo->add_option("--seed", da.seed, "seed");
  dfo->add_option("--out", da.out, "CSV path (default stdout)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "grid of replicated experiments");
  bench->add_option("--config", ba.config, "key=value config file");
  bench->add_option("--set", ba.sets, "key=value override (repeatable)");
  bench->add_option("--r-grid", ba.r_grid, "comma list of r: run the r sweep instead");
  bench->add_option("--out", ba.out, "CSV path (default stdout)");

  DiagArgs ga;
  auto* diag = app.add_subcommand("diag", "regression diagnostics for coefficients c");
  diag->add_option("--c", ga.c, "comma list of coefficients")->required();
  diag->add_option("--D", ga.D, "fifth-order constant");
  diag->add_option("--sigma-prime", ga.sigma_prime, "sigma'(theta0)");
  diag->add_option("--out", ga.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*est) return run_estimate(ea);
    if (*dfo) return run_dfo(da);
    if (*bench) return run_bench(ba);
    if (*diag) return run_diag(ga);
  } catch (const ExitError& e) {
    std::cerr << "corfd: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "corfd: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
