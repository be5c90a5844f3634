#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dgasm/errors.hpp"
#include "dgasm/experiment.hpp"
#include "test_util.hpp"

using namespace dgasm;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.h_level = 4;
  c.H_level = 2;
  c.ns_list = {4, 16};
  return c;
}

}  // namespace

TEST(Parse, MethodsRoundTrip) {
  for (Method m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(all_methods().size(), 4u);
  EXPECT_THROW(parse_method("bz"), InvalidArgument);
  EXPECT_THROW(parse_method(""), InvalidArgument);
}

TEST(Parse, CoarseSolvers) {
  EXPECT_EQ(parse_coarse_solver("auto"), CoarseSolver::automatic);
  EXPECT_EQ(parse_coarse_solver("direct"), CoarseSolver::direct);
  EXPECT_EQ(parse_coarse_solver("gmres"), CoarseSolver::iterative);
  EXPECT_THROW(parse_coarse_solver("lu"), InvalidArgument);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.H_level = 7;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.h_level = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.restart = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.threads = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.ns_list = {0};
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Table, EmptyNsListGivesEmptyTable) {
  ExperimentConfig c = small_config();
  c.ns_list.clear();
  const Table t = run_table(c);
  EXPECT_TRUE(t.rows.empty());
  std::ostringstream out;
  write_csv(t, out);
  EXPECT_EQ(out.str(), "ns,precond,iterations,rate,time_s\n");
}

TEST(Table, ErrorNamesTheCell) {
  ExperimentConfig c = small_config();
  c.ns_list = {4, 3};
  try {
    run_table(c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ns=3"), std::string::npos) << e.what();
  }
}

TEST(Table, CsvAndJsonLayout) {
  const Table t = run_table(small_config());
  ASSERT_EQ(t.rows.size(), 8u);
  std::ostringstream out;
  write_csv(t, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "ns,precond,iterations,rate,time_s");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("4,b," + std::to_string(t.iterations(4, Method::b)) + ",", 0), 0u) << line;
  int lines = 1;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 8);

  const nlohmann::json j = to_json(t);
  EXPECT_EQ(j["config"]["h_level"], 4);
  EXPECT_EQ(j["config"]["coarse_solver"], "direct");
  ASSERT_EQ(j["rows"].size(), 8u);
  const auto& row = j["rows"][0];
  EXPECT_EQ(row["config"]["ns"], 4);
  EXPECT_EQ(row["config"]["precond"], "b");
  for (const char* key : {"iterations", "converged", "stop_reason", "rate", "residual_history",
                          "coefficient_trace", "wall_time_s"})
    EXPECT_TRUE(row.contains(key)) << key;
  EXPECT_EQ(row["residual_history"].size(), t.rows[0].report.residual_history.size());
  for (const auto& r : t.rows) EXPECT_TRUE(r.report.converged);
  EXPECT_THROW(t.iterations(8, Method::b), InvalidArgument);
  const auto& bz = j["rows"][2];
  EXPECT_EQ(bz["config"]["precond"], "b+z");
  EXPECT_EQ(bz["coefficient_trace"].size(), t.rows[2].report.iterations);
}

TEST(Table, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig c = small_config();
  const Table a = run_table(c), b = run_table(c);
  c.threads = 4;
  const Table d = run_table(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  ASSERT_EQ(a.rows.size(), d.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].report.residual_history, b.rows[k].report.residual_history);
    EXPECT_EQ(a.rows[k].report.residual_history, d.rows[k].report.residual_history);
  }
}

TEST(Export, WritesArtifacts) {
  ExperimentConfig c = small_config();
  c.h_level = 3;
  c.H_level = 1;
  c.ns_list = {4};
  const auto dir = test::scratch_dir("export");
  export_artifacts(c, dir);
  for (const char* name : {"A_h.mtx", "A0.mtx", "rhs.mtx", "mesh.txt", "partition_ns4.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  std::ifstream mesh(dir / "mesh.txt");
  std::string first;
  std::getline(mesh, first);
  EXPECT_EQ(first.rfind("# level 3", 0), 0u);
}

TEST(Verify, LevelTwoPasses) {
  const auto start = std::chrono::steady_clock::now();
  const VerifyReport r = run_verify({});
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.coarse_level, 1);
  EXPECT_LT(elapsed, 10.0);
  EXPECT_LE(r.two_prec_run.iterations, r.z_run.iterations);
  const nlohmann::json j = to_json(r);
  EXPECT_TRUE(j.contains("checks"));
}

TEST(Verify, RefusesLargeLevels) {
  VerifyOptions o;
  o.level = 5;
  EXPECT_THROW(run_verify(o), InvalidArgument);
  o.level = 1;
  EXPECT_THROW(run_verify(o), InvalidArgument);
}

TEST(Verify, TamperedAlphaTripsEstimate) {
  VerifyOptions o;
  o.alpha0_scale = 1e3;
  const VerifyReport r = run_verify(o);
  EXPECT_FALSE(r.passed());
  bool found = false;
  for (const auto& c : r.checks)
    if (c.name == "estimate0") {
      found = true;
      EXPECT_FALSE(c.passed);
    }
  EXPECT_TRUE(found);
}
