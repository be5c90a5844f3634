#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dgasm/analysis.hpp"
#include "dgasm/krylov.hpp"
#include "dgasm/schwarz.hpp"

namespace dgasm {

enum class Method { b, z, b_plus_z, b_plus_bt };

std::string to_string(Method m);
Method parse_method(std::string_view name);  // "b", "z", "b+z", "b+bt"
const std::vector<Method>& all_methods();

/// How the coarse problem is solved. `automatic` uses the direct factorization
/// when coarse_tol <= kDirectCoarseTol and GMRES(20) otherwise.
enum class CoarseSolver { automatic, direct, iterative };
constexpr double kDirectCoarseTol = 1e-8;

std::string to_string(CoarseSolver s);
CoarseSolver parse_coarse_solver(std::string_view name);

struct ExperimentConfig {
  int h_level = 7;
  int H_level = 5;
  std::vector<std::size_t> ns_list{4, 8, 16, 32, 64, 128};
  std::vector<Method> methods = all_methods();
  double rel_tol = 1e-6;
  std::optional<std::size_t> restart;
  double coarse_tol = 1e-10;
  CoarseSolver coarse_solver = CoarseSolver::automatic;
  std::size_t threads = 1;
  std::size_t max_iter = 1000;
  double eta = 5.0;
  double eta0 = 5.0;

  void validate() const;
  CoarseOptions coarse_options() const;
};

struct TableRow {
  std::size_t ns = 0;
  Method method = Method::b;
  SolveReport report;
};

struct Table {
  ExperimentConfig config;
  std::vector<TableRow> rows;

  /// Iteration count of one cell; throws if absent.
  std::size_t iterations(std::size_t ns, Method method) const;
};

/// Assembles once, then builds the preconditioner per ns and runs every
/// method. Errors are rethrown with the failing (ns, precond) cell named.
Table run_table(const ExperimentConfig& config);

/// Columns: ns,precond,iterations,rate,time_s.
void write_csv(const Table& table, std::ostream& out);

nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const Table& table);
nlohmann::json to_json(const H0Constants& c);
nlohmann::json to_json(const ChainConstants& c);

/// Writes A_h, A0, the load vector (MatrixMarket), the mesh listing and one
/// partition CSV per ns into `dir`.
void export_artifacts(const ExperimentConfig& config, const std::filesystem::path& dir);

struct VerifyOptions {
  int level = 2;  // fine level, 2..4; coarse level is max(1, level - 2)
  std::size_t ns = 4;
  double alpha0_scale = 1.0;  // tamper hook applied before the bound check
  std::size_t threads = 1;
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  int level = 0;
  int coarse_level = 0;
  std::size_t ns = 0;
  ChainConstants chain;
  InversePairReport inverse_pair;
  Estimate0Report estimate0;
  SolveReport z_run;         // Z^{-1}, weighted norm
  SolveReport two_prec_run;  // (B^{-1}, Z^{-1}), weighted norm
  double max_domination_excess = 0.0;  // max_m |r_{m+1}| - min_sigma |r_m - sigma A Z^{-1} r_m|
  std::vector<VerifyCheck> checks;
  double wall_time_s = 0.0;

  bool passed() const;
};

/// Dense-oracle checks of the coercivity/boundedness chain and of both
/// convergence results on a small problem. Refuses levels above 4.
VerifyReport run_verify(const VerifyOptions& options);

nlohmann::json to_json(const VerifyReport& report);

}  // namespace dgasm
