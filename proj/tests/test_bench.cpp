#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "corfd/bench.hpp"
#include "corfd/error.hpp"
#include "corfd/stats.hpp"
#include "doctest.h"

using namespace corfd;

TEST_CASE("summary statistics") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const SummaryStats s = summarize(x, 1.0);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.bias == doctest::Approx(1.0));
  CHECK(s.variance == doctest::Approx(2.0 / 3.0));
  CHECK(s.mse == doctest::Approx(5.0 / 3.0));
  CHECK(s.reps == 3);
  const std::vector<double> one{4.0};
  CHECK(summarize(one, 4.0).mse == 0.0);
  CHECK_THROWS_AS(summarize(std::vector<double>{}, 0.0), Error);
}

TEST_CASE("CSV output") {
  std::ostringstream out;
  emit_csv(out, {"a", "b"}, {{"1", "x,y"}, {"say \"hi\"", ""}}, {"note"});
  CHECK(out.str() == "# note\na,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",\n");
  CHECK_THROWS_AS(emit_csv(out, {"a"}, {{"1", "2"}}), Error);
  CHECK(format_double(0.1) == "0.10000000000000001");
  try {
    emit_csv(std::string("/nonexistent-dir/x.csv"), {"a"}, {});
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("settings") {
  ExperimentConfig cfg;
  apply_setting(cfg, "problem = sin2");
  apply_setting(cfg, "methods=tra,opt,boot,cor");
  apply_setting(cfg, "budgets=100,1000");
  apply_setting(cfg, "U=inf");
  apply_setting(cfg, "c=1,2,3");
  apply_setting(cfg, "bootstrap=exact");
  CHECK(cfg.problem == "sin2");
  CHECK(cfg.methods.size() == 4);
  CHECK(cfg.budgets == std::vector<long>{100, 1000});
  CHECK(std::isinf(cfg.estimator.p0.upper));
  CHECK(cfg.estimator.coefficients->size() == 3);
  CHECK(cfg.estimator.bootstrap == BootstrapMode::Exact);
  CHECK_THROWS_AS(apply_setting(cfg, "colour=red"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "reps=1.5"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "reps"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "bootstrap=maybe"), Error);
}

TEST_CASE("config file") {
  const std::string path = "corfd_test_config.txt";
  {
    std::ofstream f(path);
    f << "# experiment\nproblem=poly@2\n\nreps=7   # inline\nK=5\n";
  }
  const ExperimentConfig cfg = load_experiment_config(path);
  std::remove(path.c_str());
  CHECK(cfg.problem == "poly@2");
  CHECK(cfg.reps == 7);
  CHECK(cfg.estimator.K == 5);
  try {
    load_experiment_config("missing-file.txt");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("replications: failures are per cell") {
  ExperimentConfig cfg;
  cfg.problem = "sin1";
  cfg.methods = {Method::Cor, Method::Boot};
  cfg.budgets = {200};
  cfg.reps = 20;
  cfg.estimator.bootstrap = BootstrapMode::Exact;
  const auto cells = run_replications(cfg);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].ok);
  CHECK_FALSE(cells[1].ok);
  CHECK(cells[1].error.find("fresh") != std::string::npos);
  CHECK(cells[0].stats.truth == 10.0);
  CHECK(cells[0].pairs_used_total == 20 * 200);
  CHECK(summary_rows(cells).size() == 1);

  cfg.methods = {Method::Cor};
  cfg.truth = 9.5;
  const auto over = run_replications(cfg);
  CHECK(over[0].stats.truth == 9.5);
  CHECK(over[0].estimates == cells[0].estimates);

  cfg.truth.reset();
  cfg.problem = "queue@4,4,10,service";
  cfg.methods = {Method::Opt};
  cfg.reference_reps = 1000;
  const auto no_b = run_replications(cfg);
  CHECK_FALSE(no_b[0].ok);
  CHECK(no_b[0].error.find("B") != std::string::npos);
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentConfig cfg;
  cfg.problem = "poly@1";
  cfg.methods = {Method::Cor, Method::Tra};
  cfg.budgets = {100, 500};
  cfg.reps = 40;
  cfg.estimator.I = 50;
  setenv("CORFD_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  const auto one = run_replications(cfg);
  setenv("CORFD_THREADS", "4", 1);
  CHECK(worker_count() == 4);
  const auto four = run_replications(cfg);
  unsetenv("CORFD_THREADS");
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].estimates == four[i].estimates);
}

TEST_CASE("parallel_for rethrows") {
  setenv("CORFD_THREADS", "3", 1);
  std::vector<int> hit(10, 0);
  CHECK_THROWS_AS(parallel_for(10, [&](std::size_t i) {
                    hit[i] = 1;
                    if (i == 6) fail(ErrorCode::Numeric, "boom");
                  }),
                  Error);
  unsetenv("CORFD_THREADS");
}

TEST_CASE("small summary and CSV examples") {
  const SummaryStats a = summarize(std::vector<double>{1, 1, 1}, 1.0);
  CHECK(a.bias == 0.0);
  CHECK(a.variance == 0.0);
  CHECK(a.mse == 0.0);
  const SummaryStats b = summarize(std::vector<double>{0, 2}, 1.0);
  CHECK(b.bias == 0.0);
  CHECK(b.variance == 1.0);
  CHECK(b.mse == 1.0);
  const SummaryStats c = summarize(std::vector<double>{0, 1, 2}, 0.0);
  CHECK(c.bias == doctest::Approx(1.0));
  CHECK(c.variance == doctest::Approx(2.0 / 3.0));
  CHECK(c.mse == doctest::Approx(5.0 / 3.0));

  std::ostringstream empty;
  emit_csv(empty, summary_header(), {});
  CHECK(empty.str() == "problem,method,pairs,reps,bias,variance,mse\n");

  ExperimentConfig cfg;
  cfg.problem = "sin1";
  cfg.budgets = {100};
  cfg.reps = 1;
  const auto one = run_replications(cfg);
  CHECK(one[0].stats.variance == 0.0);

  cfg.reps = 5;
  std::ostringstream x, y;
  emit_csv(x, summary_header(), summary_rows(run_replications(cfg)));
  emit_csv(y, summary_header(), summary_rows(run_replications(cfg)));
  CHECK(x.str() == y.str());
}
