#include "dgasm/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "dgasm/dg.hpp"
#include "dgasm/errors.hpp"
#include "dgasm/mesh.hpp"

namespace dgasm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

SolveResult run_method(Method method, const LinearOperator& a, const SchwarzPreconditioner& b,
                       std::span<const double> rhs, std::span<const double> x0,
                       const GmresConfig& cfg, const TwoPrecObserver& observer = {}) {
  switch (method) {
    case Method::b:
      return gmres_right(a, b.binv(), rhs, x0, cfg);
    case Method::z:
      return gmres_right(a, b.zinv(), rhs, x0, cfg);
    case Method::b_plus_z:
      return gmres_two_prec(a, {b.binv(), b.zinv_tail(), true}, rhs, x0, cfg, observer);
    case Method::b_plus_bt:
      return gmres_two_prec(a, {b.binv(), b.binv_transpose(), false}, rhs, x0, cfg, observer);
  }
  throw InvalidArgument("unknown method");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::b: return "b";
    case Method::z: return "z";
    case Method::b_plus_z: return "b+z";
    case Method::b_plus_bt: return "b+bt";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods())
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown preconditioner '" + std::string(name) +
                        "' (expected b, z, b+z or b+bt)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::b, Method::z, Method::b_plus_z,
                                           Method::b_plus_bt};
  return methods;
}

std::string to_string(CoarseSolver s) {
  switch (s) {
    case CoarseSolver::automatic: return "auto";
    case CoarseSolver::direct: return "direct";
    case CoarseSolver::iterative: return "gmres";
  }
  return "?";
}

CoarseSolver parse_coarse_solver(std::string_view name) {
  for (CoarseSolver s : {CoarseSolver::automatic, CoarseSolver::direct, CoarseSolver::iterative})
    if (to_string(s) == name) return s;
  throw InvalidArgument("unknown coarse solver '" + std::string(name) +
                        "' (expected auto, direct or gmres)");
}

void ExperimentConfig::validate() const {
  if (h_level < 2 || h_level > 12) throw InvalidArgument("h_level must lie in [2, 12]");
  if (H_level < 1 || H_level >= h_level)
    throw InvalidArgument("H_level must satisfy 1 <= H_level < h_level");
  for (std::size_t ns : ns_list)
    if (ns == 0) throw InvalidArgument("ns values must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("tol must lie in (0, 1)");
  if (restart && *restart == 0) throw InvalidArgument("restart must be >= 1");
  if (!(coarse_tol > 0.0 && coarse_tol < 1.0))
    throw InvalidArgument("coarse tol must lie in (0, 1)");
  if (threads == 0) throw InvalidArgument("threads must be >= 1");
  if (max_iter == 0) throw InvalidArgument("max_iter must be >= 1");
  if (!(eta > 0.0) || !(eta0 > 0.0)) throw InvalidArgument("penalties must be positive");
}

CoarseOptions ExperimentConfig::coarse_options() const {
  CoarseOptions opt;
  opt.rel_tol = coarse_tol;
  const bool direct = coarse_solver == CoarseSolver::direct ||
                      (coarse_solver == CoarseSolver::automatic && coarse_tol <= kDirectCoarseTol);
  opt.mode = direct ? CoarseSolve::direct : CoarseSolve::iterative;
  return opt;
}

std::size_t Table::iterations(std::size_t ns, Method method) const {
  for (const auto& row : rows)
    if (row.ns == ns && row.method == method) return row.report.iterations;
  throw InvalidArgument("no table cell for ns=" + std::to_string(ns) +
                        " precond=" + to_string(method));
}

Table run_table(const ExperimentConfig& config) {
  config.validate();
  Table table{config, {}};
  if (config.ns_list.empty() || config.methods.empty()) return table;

  const DgSpace space(build_structured_mesh(config.h_level));
  const CsrMatrix a = assemble_iipg(space, config.eta);
  const auto a0 = std::make_shared<const CsrMatrix>(assemble_sym(space, config.eta0));
  const Vector rhs = assemble_rhs(space);
  const Vector x0(rhs.size(), 0.0);
  const auto coarse = std::make_shared<const CoarseOperator>(
      space, config.H_level, CoarseForm::iipg, config.eta, config.coarse_options());
  const LinearOperator a_op = make_operator(a);

  GmresConfig cfg;
  cfg.rel_tol = config.rel_tol;
  cfg.restart = config.restart;
  cfg.max_iter = config.max_iter;

  for (std::size_t ns : config.ns_list) {
    std::optional<SchwarzPreconditioner> b;
    try {
      const SubdomainPartition partition = build_partition(space.mesh(), ns);
      b.emplace(build_preconditioner(a, a0, partition, coarse, {config.threads}));
    } catch (const std::exception& e) {
      throw Error("ns=" + std::to_string(ns) + ": " + e.what());
    }
    for (Method method : config.methods) {
      try {
        SolveResult res = run_method(method, a_op, *b, rhs, x0, cfg);
        table.rows.push_back({ns, method, std::move(res.report)});
      } catch (const std::exception& e) {
        throw Error("ns=" + std::to_string(ns) + " precond=" + to_string(method) + ": " +
                    e.what());
      }
    }
  }
  return table;
}

void write_csv(const Table& table, std::ostream& out) {
  out << "ns,precond,iterations,rate,time_s\n";
  for (const auto& row : table.rows)
    out << row.ns << ',' << to_string(row.method) << ',' << row.report.iterations << ','
        << fmt(row.report.convergence_rate) << ',' << fmt(row.report.wall_time_s) << '\n';
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["h_level"] = c.h_level;
  j["H_level"] = c.H_level;
  j["ns"] = c.ns_list;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["precond"] = methods;
  j["tol"] = c.rel_tol;
  j["restart"] = c.restart ? nlohmann::json(*c.restart) : nlohmann::json(nullptr);
  j["coarse_tol"] = c.coarse_tol;
  j["coarse_solver"] = c.coarse_options().mode == CoarseSolve::direct ? "direct" : "gmres";
  j["threads"] = c.threads;
  j["max_iter"] = c.max_iter;
  j["eta"] = c.eta;
  j["eta0"] = c.eta0;
  return j;
}

nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stop_reason"] = to_string(r.reason);
  j["rate"] = r.convergence_rate;
  j["residual_history"] = r.residual_history;
  auto trace = nlohmann::json::array();
  for (const auto& c : r.coefficient_trace)
    trace.push_back({{"alpha_first", c.first}, {"alpha_second", c.second}, {"sigma", c.sigma}});
  j["coefficient_trace"] = trace;
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

nlohmann::json to_json(const Table& table) {
  nlohmann::json j;
  j["config"] = to_json(table.config);
  auto rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json cell = to_json(row.report);
    nlohmann::json echo = to_json(table.config);
    echo["ns"] = row.ns;
    echo["precond"] = to_string(row.method);
    cell["config"] = echo;
    rows.push_back(cell);
  }
  j["rows"] = rows;
  return j;
}

nlohmann::json to_json(const H0Constants& c) { return {{"c0", c.c0}, {"c1", c.c1}}; }

nlohmann::json to_json(const ChainConstants& c) {
  return {{"c0", c.a_a0.c0},
          {"c1", c.a_a0.c1},
          {"gamma0", c.gamma0},
          {"gamma1", c.gamma1},
          {"beta0", c.beta0},
          {"beta1", c.beta1},
          {"alpha0", c.alpha0},
          {"alpha1", c.alpha1},
          {"closed_form",
           {{"beta0", c.beta0_bound},
            {"beta1", c.beta1_bound},
            {"alpha0", c.alpha0_bound},
            {"alpha1_printed", c.alpha1_printed},
            {"alpha1_consistent", c.alpha1_consistent}}}};
}

void export_artifacts(const ExperimentConfig& config, const std::filesystem::path& dir) {
  config.validate();
  std::filesystem::create_directories(dir);
  const DgSpace space(build_structured_mesh(config.h_level));
  write_matrix_market(assemble_iipg(space, config.eta), dir / "A_h.mtx");
  write_matrix_market(assemble_sym(space, config.eta0), dir / "A0.mtx");
  write_vector_market(assemble_rhs(space), dir / "rhs.mtx");
  {
    std::ofstream out(dir / "mesh.txt");
    write_mesh_listing(space.mesh(), out);
  }
  for (std::size_t ns : config.ns_list) {
    std::ofstream out(dir / ("partition_ns" + std::to_string(ns) + ".csv"));
    write_partition_csv(build_partition(space.mesh(), ns), out);
  }
}

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

VerifyReport run_verify(const VerifyOptions& options) {
  if (options.level < 2 || options.level > 4)
    throw InvalidArgument("verify: level must lie in [2, 4] (dense oracles), got " +
                          std::to_string(options.level));
  if (!(options.alpha0_scale > 0.0)) throw InvalidArgument("verify: alpha0 scale must be positive");
  const auto start = Clock::now();
  VerifyReport rep;
  rep.level = options.level;
  rep.coarse_level = std::max(1, options.level - 2);
  rep.ns = options.ns;
  constexpr double eta = 5.0;

  const DgSpace space(build_structured_mesh(rep.level));
  const CsrMatrix a = assemble_iipg(space, eta);
  const auto a0 = std::make_shared<const CsrMatrix>(assemble_sym(space, eta));
  const Vector rhs = assemble_rhs(space);
  const Vector x0(rhs.size(), 0.0);
  const SubdomainPartition partition = build_partition(space.mesh(), rep.ns);
  const auto coarse =
      std::make_shared<const CoarseOperator>(space, rep.coarse_level, CoarseForm::iipg, eta);
  const SchwarzPreconditioner b =
      build_preconditioner(a, a0, partition, coarse, {options.threads});
  const SchwarzPreconditioner b0 =
      build_B0(*a0, partition, space, rep.coarse_level, eta, {options.threads});

  const DenseMatrix ad = to_dense(a), a0d = to_dense(*a0);
  rep.chain = measure_chain(ad, a0d, densify(b.binv(), options.threads),
                            densify(b0.binv(), options.threads),
                            densify(b.zinv(), options.threads));
  const ChainConstants& ch = rep.chain;
  rep.checks.push_back({"h0_constants", 0.0 < ch.a_a0.c0 && ch.a_a0.c0 <= ch.a_a0.c1,
                        "c0=" + fmt(ch.a_a0.c0) + " c1=" + fmt(ch.a_a0.c1)});

  rep.inverse_pair = verify_inverse_pair(ch.a_a0, ad, a0d);
  const auto& ip = rep.inverse_pair;
  rep.checks.push_back({"inverse_pair", ip.passed,
                        "c0'=" + fmt(ip.measured.c0) + " >= " + fmt(ip.lower_bound) +
                            ", c1'=" + fmt(ip.measured.c1) + " <= " + fmt(ip.upper_bound)});

  const bool ordered = 0.0 < ch.gamma0 && ch.gamma0 <= ch.gamma1 && 0.0 < ch.beta0 &&
                       ch.beta0 <= ch.beta1 && 0.0 < ch.alpha0 && ch.alpha0 <= ch.alpha1;
  rep.checks.push_back({"chain_constants", ordered,
                        "gamma=(" + fmt(ch.gamma0) + "," + fmt(ch.gamma1) + ") beta=(" +
                            fmt(ch.beta0) + "," + fmt(ch.beta1) + ") alpha=(" +
                            fmt(ch.alpha0) + "," + fmt(ch.alpha1) + ")"});
  rep.checks.push_back(
      {"beta_bounds", ch.beta0 >= ch.beta0_bound - 1e-8 && ch.beta1 <= ch.beta1_bound + 1e-8,
       "beta0=" + fmt(ch.beta0) + " >= " + fmt(ch.beta0_bound) + ", beta1=" + fmt(ch.beta1) +
           " <= " + fmt(ch.beta1_bound)});

  const LinearOperator a_op = make_operator(a);
  GmresConfig cfg;
  cfg.weight_inverse = b.zinv();
  cfg.max_iter = 2000;
  rep.z_run = gmres_right(a_op, b.zinv(), rhs, x0, cfg).report;
  const double alpha0 = ch.alpha0 * options.alpha0_scale;
  const double alpha1 = std::max(ch.alpha1, alpha0);
  rep.estimate0 = check_estimate0(rep.z_run.residual_history, alpha0, alpha1);
  rep.checks.push_back(
      {"estimate0", rep.z_run.converged && rep.estimate0.holds,
       "factor=" + fmt(rep.estimate0.factor) + " tightest m=" +
           std::to_string(rep.estimate0.tightest_m) + " ratio=" +
           fmt(rep.estimate0.tightest_ratio) +
           (rep.estimate0.first_violation
                ? " violated at m=" + std::to_string(*rep.estimate0.first_violation)
                : "")});

  const LinearOperator w = b.zinv();
  double worst = -INFINITY;
  TwoPrecObserver observer = [&](const TwoPrecStep& s) {
    const Vector q = a_op(s.second_preconditioned);
    const double best = one_step_minimum(s.residual_before, q, w);
    const Vector wr = w(s.residual_after);
    const double after = std::sqrt(std::max(dot(s.residual_after, wr), 0.0));
    worst = std::max(worst, after - best);
  };
  rep.two_prec_run = run_method(Method::b_plus_z, a_op, b, rhs, x0, cfg, observer).report;
  rep.max_domination_excess = worst;
  const double r0 = rep.two_prec_run.residual_history.front();
  rep.checks.push_back({"two_prec_domination", rep.two_prec_run.converged && worst <= 1e-12 * r0,
                        "max excess/r0=" + fmt(worst / r0)});
  rep.checks.push_back(
      {"two_prec_iterations", rep.two_prec_run.iterations <= rep.z_run.iterations,
       std::to_string(rep.two_prec_run.iterations) + " <= " + std::to_string(rep.z_run.iterations)});

  rep.wall_time_s = seconds_since(start);
  return rep;
}

nlohmann::json to_json(const VerifyReport& r) {
  nlohmann::json j;
  j["level"] = r.level;
  j["coarse_level"] = r.coarse_level;
  j["ns"] = r.ns;
  j["constants"] = to_json(r.chain);
  j["inverse_pair"] = {{"c0", r.inverse_pair.measured.c0},
                       {"c1", r.inverse_pair.measured.c1},
                       {"lower_bound", r.inverse_pair.lower_bound},
                       {"upper_bound", r.inverse_pair.upper_bound}};
  j["estimate0"] = {{"holds", r.estimate0.holds},
                    {"factor", r.estimate0.factor},
                    {"tightest_m", r.estimate0.tightest_m},
                    {"tightest_ratio", r.estimate0.tightest_ratio}};
  j["z_run"] = to_json(r.z_run);
  j["two_prec_run"] = to_json(r.two_prec_run);
  j["max_domination_excess"] = r.max_domination_excess;
  auto checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  j["passed"] = r.passed();
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

}  // namespace dgasm
