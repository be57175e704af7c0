#include "corfd/bench.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "corfd/error.hpp"
#include "corfd/oracle.hpp"

namespace corfd {

const char* const kVarianceConvention =
    "variance uses denominator R (population form), so mse = bias^2 + variance";

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(std::string_view key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "bad number for " + std::string(key) + ": '" + v + "'");
}

long to_long(std::string_view key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != double(long(x)))
    fail(ErrorCode::InvalidArgument, std::string(key) + " must be an integer");
  return long(x);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(reps >= 1, "reps must be >= 1");
  require(!methods.empty(), "no methods selected");
  require(!budgets.empty(), "no budgets selected");
  for (long n : budgets) require(n >= 1, "budgets must be >= 1");
}

void apply_setting(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos,
          "setting must look like key=value: '" + std::string(assignment) + "'");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string val = trim(assignment.substr(eq + 1));
  EstimatorConfig& e = cfg.estimator;

  if (key == "problem") {
    cfg.problem = val;
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& m : split_list(val)) cfg.methods.push_back(parse_method(m));
  } else if (key == "budgets") {
    cfg.budgets.clear();
    for (const auto& b : split_list(val)) cfg.budgets.push_back(to_long(key, b));
  } else if (key == "reps") {
    cfg.reps = to_long(key, val);
  } else if (key == "seed") {
    cfg.seed = std::uint64_t(to_long(key, val));
  } else if (key == "coord") {
    cfg.coord = std::size_t(to_long(key, val));
  } else if (key == "truth") {
    cfg.truth = to_double(key, val);
  } else if (key == "reference_reps") {
    cfg.reference_reps = to_long(key, val);
  } else if (key == "output") {
    cfg.output = val;
  } else if (key == "K") {
    e.K = int(to_long(key, val));
  } else if (key == "n_b") {
    e.n_b = int(to_long(key, val));
  } else if (key == "r") {
    e.r = to_double(key, val);
  } else if (key == "I") {
    e.I = int(to_long(key, val));
  } else if (key == "bootstrap") {
    if (val == "mc")
      e.bootstrap = BootstrapMode::MonteCarlo;
    else if (val == "exact")
      e.bootstrap = BootstrapMode::Exact;
    else
      fail(ErrorCode::InvalidArgument, "bootstrap must be mc|exact");
  } else if (key == "gamma") {
    e.gamma = to_double(key, val);
  } else if (key == "mu0") {
    e.p0.mu0 = to_double(key, val);
  } else if (key == "sigma0") {
    e.p0.sigma0 = to_double(key, val);
  } else if (key == "L") {
    e.p0.lower = to_double(key, val);
  } else if (key == "U") {
    e.p0.upper = val == "inf" ? std::numeric_limits<double>::infinity()
                              : to_double(key, val);
  } else if (key == "eps") {
    e.clamp_eps = to_double(key, val);
  } else if (key == "c") {
    std::vector<double> c;
    for (const auto& x : split_list(val)) c.push_back(to_double(key, x));
    e.coefficients = c;
  } else if (key == "tra_h") {
    e.tra_h = to_double(key, val);
  } else if (key == "tra_B") {
    e.tra_B = to_double(key, val);
  } else if (key == "tra_sigma2") {
    e.tra_sigma2 = to_double(key, val);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown setting '" + key + "'");
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config file " + path);
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (!body.empty()) apply_setting(cfg, body);
  }
  return cfg;
}

std::optional<double> resolve_truth(const ExperimentConfig& cfg) {
  if (cfg.truth) return cfg.truth;
  const Problem p = parse_problem(cfg.problem);
  const GroundTruth t = p.oracle->truth(p.theta0, cfg.coord);
  if (t.deriv) return t.deriv;
  if (p.reference_derivative) {
    RngStream rng(cfg.seed, 0xfeed);
    return p.reference_derivative(cfg.reference_reps, rng);
  }
  return std::nullopt;
}

std::vector<CellResult> run_replications(const ExperimentConfig& cfg) {
  cfg.validate();
  const Problem p = parse_problem(cfg.problem);
  require(cfg.coord < p.oracle->dim(), "coordinate out of range");
  const std::optional<double> truth = resolve_truth(cfg);
  const RngStream root(cfg.seed, 0);

  std::vector<CellResult> cells;
  for (Method m : cfg.methods) {
    for (long n : cfg.budgets) {
      CellResult cell;
      cell.problem = cfg.problem;
      cell.method = m;
      cell.pairs = n;
      try {
        cell.estimates.resize(std::size_t(cfg.reps));
        cell.perturbations.resize(std::size_t(cfg.reps));
        std::vector<long> used(std::size_t(cfg.reps));
        parallel_for(cell.estimates.size(), [&](std::size_t i) {
          RngStream s = root.substream(stream_tag::indexed(stream_tag::kReplication, i));
          const GradientEstimate g =
              estimate(m, *p.oracle, p.theta0, cfg.coord, n, cfg.estimator, s);
          cell.estimates[i] = g.value;
          cell.perturbations[i] = g.perturbation;
          used[i] = g.pairs_used;
        });
        for (long u : used) cell.pairs_used_total += u;
        if (!truth) fail(ErrorCode::MissingTruth, "no ground truth for " + cfg.problem);
        cell.stats = summarize(cell.estimates, *truth);
        cell.ok = true;
      } catch (const std::exception& ex) {
        cell.ok = false;
        cell.error = ex.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_field(std::ostream& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out << f;
    return;
  }
  out << '"';
  for (char ch : f) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

void write_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    write_field(out, row[i]);
  }
  out << '\n';
}

}  // namespace

void emit_csv(std::ostream& out, const CsvRow& header, const std::vector<CsvRow>& rows,
              const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  write_row(out, header);
  for (const auto& r : rows) {
    require(r.size() == header.size(), "CSV row width differs from the header");
    write_row(out, r);
  }
}

void emit_csv(const std::string& path, const CsvRow& header,
              const std::vector<CsvRow>& rows, const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  emit_csv(out, header, rows, comments);
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

const CsvRow& summary_header() {
  static const CsvRow h{"problem", "method", "pairs", "reps", "bias", "variance", "mse"};
  return h;
}

std::vector<CsvRow> summary_rows(const std::vector<CellResult>& cells) {
  std::vector<CsvRow> rows;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    rows.push_back({c.problem, std::string(method_name(c.method)), std::to_string(c.pairs),
                    std::to_string(c.stats.reps), format_double(c.stats.bias),
                    format_double(c.stats.variance), format_double(c.stats.mse)});
  }
  return rows;
}

}  // namespace corfd
