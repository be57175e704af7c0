#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "corfd/estimators.hpp"
#include "corfd/stats.hpp"

namespace corfd {

struct ExperimentConfig {
  std::string problem = "poly@0";
  std::vector<Method> methods{Method::Cor};
  std::vector<long> budgets{1000};
  long reps = 1000;
  std::uint64_t seed = 1;
  std::size_t coord = 0;
  EstimatorConfig estimator;
  std::optional<double> truth;  // overrides the problem's ground truth
  long reference_reps = 1'000'000;
  std::string output;  // empty: stdout

  void validate() const;
};

// Applies one "key=value" assignment. Unknown keys raise InvalidArgument.
// Keys: problem, methods, budgets, reps, seed, coord, truth, reference_reps,
// output, K, n_b, r, I, bootstrap (mc|exact), gamma, mu0, sigma0, L, U, eps,
// c (comma list), tra_h, tra_B, tra_sigma2.
void apply_setting(ExperimentConfig& cfg, std::string_view assignment);

// Flat key=value file; '#' starts a comment, blank lines are skipped.
ExperimentConfig load_experiment_config(const std::string& path);

struct CellResult {
  std::string problem;
  Method method = Method::Cor;
  long pairs = 0;
  bool ok = false;
  std::string error;
  SummaryStats stats;
  std::vector<double> estimates;
  std::vector<double> perturbations;
  long pairs_used_total = 0;
};

// Truth used for summaries: cfg.truth, else the oracle's deriv, else the
// problem's reference derivative at cfg.reference_reps.
std::optional<double> resolve_truth(const ExperimentConfig& cfg);

// Every (method, budget) cell with R replications. Replication i of every cell
// draws from RngStream(seed, 0).substream(indexed(kReplication, i)). A failing
// cell is reported with ok = false and the rest still run.
std::vector<CellResult> run_replications(const ExperimentConfig& cfg);

using CsvRow = std::vector<std::string>;

// Formats with 17 significant digits.
std::string format_double(double v);

// RFC 4180 quoting; comment lines are written first, each prefixed by "# ".
void emit_csv(std::ostream& out, const CsvRow& header,
              const std::vector<CsvRow>& rows,
              const std::vector<std::string>& comments = {});
void emit_csv(const std::string& path, const CsvRow& header,
              const std::vector<CsvRow>& rows,
              const std::vector<std::string>& comments = {});

// problem,method,pairs,reps,bias,variance,mse rows for ok cells.
std::vector<CsvRow> summary_rows(const std::vector<CellResult>& cells);
const CsvRow& summary_header();
extern const char* const kVarianceConvention;

}  // namespace corfd
