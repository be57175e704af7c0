#include "corfd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "corfd/error.hpp"

namespace corfd {

namespace {

class SinOracle final : public SimulationOracle {
 public:
  SinOracle(double kappa, SinCase which) : kappa_(kappa), case_(which) {}

  std::size_t dim() const override { return 1; }
  std::string label() const override {
    std::ostringstream os;
    os << (case_ == SinCase::Homoscedastic ? "sin1" : "sin2") << "@" << kappa_;
    return os.str();
  }
  double eval(std::span<const double> theta, RngStream& rng) const override {
    const double t = theta[0];
    return kappa_ * std::sin(t) + sd(t) * rng.normal();
  }
  std::optional<double> mean(std::span<const double> theta) const override {
    return kappa_ * std::sin(theta[0]);
  }
  GroundTruth truth(std::span<const double> theta0, std::size_t) const override {
    const double c = kappa_ * std::cos(theta0[0]);
    const double s = sd(theta0[0]);
    return {c, -c / 6.0, c / 120.0, s * s};
  }

 private:
  double sd(double t) const {
    return case_ == SinCase::Homoscedastic ? 1.0 : std::exp(-1.5 * t);
  }

  double kappa_;
  SinCase case_;
};

double poly_value(double t) {
  return 1.0 - 6.0 * t + 6.0 * t * t - 2.5 * t * t * t + 0.1 * std::pow(t, 5);
}

class PolyOracle final : public SimulationOracle {
 public:
  std::size_t dim() const override { return 1; }
  std::string label() const override { return "poly"; }
  double eval(std::span<const double> theta, RngStream& rng) const override {
    return poly_value(theta[0]) + rng.normal();
  }
  std::optional<double> mean(std::span<const double> theta) const override {
    return poly_value(theta[0]);
  }
  GroundTruth truth(std::span<const double> theta0, std::size_t) const override {
    const double t = theta0[0];
    const double t2 = t * t;
    return {-6.0 + 12.0 * t - 7.5 * t2 + 0.5 * t2 * t2, -2.5 + t2, 0.1, 1.0};
  }
};

class BenchOracle final : public SimulationOracle {
 public:
  BenchOracle(BenchFunction fn, std::size_t d) : fn_(fn), d_(d) {}

  std::size_t dim() const override { return d_; }
  std::string label() const override {
    return fn_ == BenchFunction::Rosenbrock ? "rosenbrock"
                                            : "zakharov@" + std::to_string(d_);
  }
  double eval(std::span<const double> theta, RngStream& rng) const override {
    return value(theta) + rng.normal();
  }
  std::optional<double> mean(std::span<const double> theta) const override {
    return value(theta);
  }
  GroundTruth truth(std::span<const double> x, std::size_t i) const override {
    GroundTruth g;
    g.noise_var = 1.0;
    g.fifth_const = 0.0;
    if (fn_ == BenchFunction::Rosenbrock) {
      if (i == 0) {
        g.deriv = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
        g.bias_const = 400.0 * x[0];
      } else {
        g.deriv = 200.0 * (x[1] - x[0] * x[0]);
        g.bias_const = 0.0;
      }
    } else {
      double s = 0.0;
      for (std::size_t j = 0; j < d_; ++j) s += 0.5 * double(j + 1) * x[j];
      const double w = 0.5 * double(i + 1);
      g.deriv = 2.0 * x[i] + 2.0 * s * w + 4.0 * s * s * s * w;
      g.bias_const = 4.0 * s * w * w * w;
    }
    return g;
  }
  std::optional<std::vector<double>> minimizer() const override {
    return std::vector<double>(d_, fn_ == BenchFunction::Rosenbrock ? 1.0 : 0.0);
  }

 private:
  double value(std::span<const double> x) const {
    return fn_ == BenchFunction::Rosenbrock ? rosenbrock(x) : zakharov(x);
  }

  BenchFunction fn_;
  std::size_t d_;
};

class QueueOracle final : public SimulationOracle {
 public:
  QueueOracle(QueueSpec spec, QueueParameter parameter, QueueMetric metric)
      : spec_(spec), parameter_(parameter), metric_(metric) {}

  std::size_t dim() const override { return 1; }
  std::string label() const override {
    std::ostringstream os;
    os << "queue@" << spec_.arrival_rate << "," << spec_.service_rate << ","
       << spec_.customers << ","
       << (parameter_ == QueueParameter::Arrival ? "arrival" : "service") << ","
       << (metric_ == QueueMetric::Waiting ? "waiting" : "sojourn");
    return os.str();
  }
  double eval(std::span<const double> theta, RngStream& rng) const override {
    QueueSpec s = spec_;
    if (parameter_ == QueueParameter::Arrival)
      s.arrival_rate = theta[0];
    else
      s.service_rate = theta[0];
    require(s.arrival_rate > 0.0 && s.service_rate > 0.0,
            "queue rates must stay positive");
    return simulate_queue(s, metric_, rng);
  }

 private:
  QueueSpec spec_;
  QueueParameter parameter_;
  QueueMetric metric_;
};

class FunctionOracle final : public SimulationOracle {
 public:
  FunctionOracle(std::string label, std::size_t dim, MeanFunction fn, double sd)
      : label_(std::move(label)), dim_(dim), fn_(std::move(fn)), sd_(sd) {}

  std::size_t dim() const override { return dim_; }
  std::string label() const override { return label_; }
  double eval(std::span<const double> theta, RngStream& rng) const override {
    const double v = fn_(theta);
    return sd_ > 0.0 ? v + sd_ * rng.normal() : v;
  }
  std::optional<double> mean(std::span<const double> theta) const override {
    return fn_(theta);
  }

 private:
  std::string label_;
  std::size_t dim_;
  MeanFunction fn_;
  double sd_;
};

void validate(const QueueSpec& spec) {
  require(std::isfinite(spec.arrival_rate) && spec.arrival_rate > 0.0,
          "queue arrival rate must be positive and finite");
  require(std::isfinite(spec.service_rate) && spec.service_rate > 0.0,
          "queue service rate must be positive and finite");
  require(spec.customers >= 1, "queue horizon must be at least one customer");
}

double parse_double(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used == str.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument,
       "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
}

}  // namespace

double rosenbrock(std::span<const double> x) {
  const double a = x[1] - x[0] * x[0];
  const double b = x[0] - 1.0;
  return 100.0 * a * a + b * b;
}

double zakharov(std::span<const double> x) {
  double sq = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    s += 0.5 * double(i + 1) * x[i];
  }
  const double s2 = s * s;
  return sq + s2 + s2 * s2;
}

OraclePtr sin_oracle(double kappa, SinCase which) {
  require(kappa != 0.0 && std::isfinite(kappa), "sin oracle needs kappa != 0");
  return std::make_shared<SinOracle>(kappa, which);
}

OraclePtr poly_oracle() { return std::make_shared<PolyOracle>(); }

OraclePtr noisy_bench_oracle(BenchFunction fn, std::size_t d) {
  if (fn == BenchFunction::Rosenbrock)
    require(d == 2, "rosenbrock is defined for d = 2 only");
  else
    require(d >= 1, "zakharov needs d >= 1");
  return std::make_shared<BenchOracle>(fn, d);
}

OraclePtr queue_oracle(const QueueSpec& spec, QueueParameter parameter,
                       QueueMetric metric) {
  validate(spec);
  return std::make_shared<QueueOracle>(spec, parameter, metric);
}

OraclePtr function_oracle(std::string label, std::size_t dim, MeanFunction fn,
                          double noise_sd) {
  require(dim >= 1, "function oracle needs dim >= 1");
  require(noise_sd >= 0.0, "noise sd must be nonnegative");
  return std::make_shared<FunctionOracle>(std::move(label), dim, std::move(fn),
                                          noise_sd);
}

double simulate_queue(const QueueSpec& spec, QueueMetric metric, RngStream& rng) {
  const int n = spec.customers;
  double wait = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double service = -std::log(rng.uniform_open()) / spec.service_rate;
    total += metric == QueueMetric::Sojourn ? wait + service : wait;
    if (i + 1 < n) {
      const double gap = -std::log(rng.uniform_open()) / spec.arrival_rate;
      wait = std::max(wait + service - gap, 0.0);
    }
  }
  return total / n;
}

double lr_derivative(const QueueSpec& spec, QueueParameter parameter,
                     QueueMetric metric, long reps, RngStream& rng) {
  validate(spec);
  require(reps >= 1, "lr_derivative needs reps >= 1");
  const int n = spec.customers;
  const double lam = spec.arrival_rate;
  const double mu = spec.service_rate;
  double acc = 0.0;
  for (long r = 0; r < reps; ++r) {
    double wait = 0.0;
    double total = 0.0;
    double score = 0.0;
    for (int i = 0; i < n; ++i) {
      const double service = -std::log(rng.uniform_open()) / mu;
      total += metric == QueueMetric::Sojourn ? wait + service : wait;
      // S_N only enters the sojourn metric.
      const bool service_matters = metric == QueueMetric::Sojourn || i + 1 < n;
      if (parameter == QueueParameter::Service && service_matters)
        score += 1.0 / mu - service;
      if (i + 1 < n) {
        const double gap = -std::log(rng.uniform_open()) / lam;
        if (parameter == QueueParameter::Arrival) score += 1.0 / lam - gap;
        wait = std::max(wait + service - gap, 0.0);
      }
    }
    acc += (total / n) * score;
  }
  return acc / double(reps);
}

Problem parse_problem(std::string_view id) {
  const auto at = id.find('@');
  const std::string_view head = id.substr(0, at);
  const std::string_view tail =
      at == std::string_view::npos ? std::string_view{} : id.substr(at + 1);
  Problem p;
  p.id = std::string(id);

  if (head == "sin1" || head == "sin2") {
    const double kappa = tail.empty() ? 10.0 : parse_double(tail, "kappa");
    p.oracle = sin_oracle(kappa, head == "sin1" ? SinCase::Homoscedastic
                                                : SinCase::Heteroscedastic);
    p.theta0 = {0.0};
  } else if (head == "poly") {
    require(!tail.empty(), "poly needs a point: poly@<theta0>");
    p.oracle = poly_oracle();
    p.theta0 = {parse_double(tail, "theta0")};
  } else if (head == "rosenbrock") {
    require(tail.empty(), "rosenbrock takes no parameters");
    p.oracle = noisy_bench_oracle(BenchFunction::Rosenbrock, 2);
    p.theta0 = {-1.2, 1.0};
  } else if (head == "zakharov") {
    require(!tail.empty(), "zakharov needs a dimension: zakharov@<d>");
    const double d = parse_double(tail, "dimension");
    require(d >= 1.0 && d == std::floor(d), "zakharov dimension must be >= 1");
    p.oracle = noisy_bench_oracle(BenchFunction::Zakharov, std::size_t(d));
    p.theta0.assign(std::size_t(d), 1.0);
  } else if (head == "queue") {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : tail) {
      if (ch == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    parts.push_back(cur);
    require(parts.size() == 4 || parts.size() == 5,
            "queue id is queue@<lam>,<mu>,<N>,<param>[,<metric>]");
    QueueSpec spec;
    spec.arrival_rate = parse_double(parts[0], "arrival rate");
    spec.service_rate = parse_double(parts[1], "service rate");
    const double n = parse_double(parts[2], "horizon");
    require(n >= 1.0 && n == std::floor(n), "queue horizon must be integral");
    spec.customers = int(n);
    QueueParameter param;
    if (parts[3] == "arrival")
      param = QueueParameter::Arrival;
    else if (parts[3] == "service")
      param = QueueParameter::Service;
    else
      fail(ErrorCode::InvalidArgument, "queue parameter must be arrival|service");
    QueueMetric metric = QueueMetric::Sojourn;
    if (parts.size() == 5) {
      if (parts[4] == "waiting")
        metric = QueueMetric::Waiting;
      else if (parts[4] != "sojourn")
        fail(ErrorCode::InvalidArgument, "queue metric must be waiting|sojourn");
    }
    p.oracle = queue_oracle(spec, param, metric);
    p.reference_derivative = [spec, param, metric](long reps, RngStream& rng) {
      return lr_derivative(spec, param, metric, reps, rng);
    };
    p.theta0 = {param == QueueParameter::Arrival ? spec.arrival_rate
                                                 : spec.service_rate};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown problem id '" + std::string(id) + "'");
  }
  return p;
}

}  // namespace corfd
