#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgasm/sparse.hpp"

namespace dgasm {

/// A square linear (or, for inexact inner solves, nearly linear) map.
struct LinearOperator {
  std::size_t size = 0;
  std::function<void(std::span<const double> in, std::span<double> out)> apply;

  Vector operator()(std::span<const double> in) const {
    Vector out(size);
    apply(in, out);
    return out;
  }
};

LinearOperator make_operator(const CsrMatrix& m);
LinearOperator make_transpose_operator(const CsrMatrix& m);
LinearOperator identity_operator(std::size_t n);

struct GmresConfig {
  double rel_tol = 1e-6;
  std::optional<std::size_t> restart;  // cycle length; none = never restart
  std::size_t max_iter = 1000;
  /// When set, residuals are measured and minimized in the norm
  /// sqrt(r^T W^{-1} r), with W^{-1} applied by this operator (must be SPD).
  std::optional<LinearOperator> weight_inverse;
  bool record_history = true;

  void validate() const;
};

struct CoefficientRecord {
  double first = 0.0;   // alpha_{m+1/3}
  double second = 0.0;  // alpha_{m+2/3}
  double sigma = 0.0;   // second / first (0 when first == 0)
};

enum class StopReason { converged, max_iterations, stagnation };

struct SolveReport {
  std::size_t iterations = 0;
  bool converged = false;
  StopReason reason = StopReason::max_iterations;
  /// Residual norms in the configured norm; entry 0 is the initial residual.
  /// The final entry is recomputed from b - A x.
  std::vector<double> residual_history;
  double convergence_rate = 0.0;
  std::vector<CoefficientRecord> coefficient_trace;
  double wall_time_s = 0.0;
};

struct SolveResult {
  Vector x;
  SolveReport report;
};

std::string to_string(StopReason r);

/// Flexible right-preconditioned GMRES. Preconditioned directions are stored
/// explicitly, so `precond` may vary between applications.
SolveResult gmres_right(const LinearOperator& a, const LinearOperator& precond,
                        std::span<const double> b, std::span<const double> x0,
                        const GmresConfig& cfg);

struct TwoPreconditioners {
  LinearOperator first;
  LinearOperator second;
  /// If true, the second preconditioned vector is computed as second(first(r))
  /// instead of second(r). With first = B^{-1} and second = B^{-T} A0 this
  /// yields Z^{-1} r while reusing B^{-1} r.
  bool second_chains_first = false;
};

/// Data handed to an observer after every iteration of gmres_two_prec.
struct TwoPrecStep {
  std::size_t iteration = 0;  // 1-based
  std::span<const double> residual_before;
  std::span<const double> residual_after;
  std::span<const double> second_preconditioned;  // M2^{-1} r_m
  std::span<const double> direction_image;        // A d_{m+1}, empty if none was added
  bool cycle_restarted = false;                   // directions were discarded after this step
  CoefficientRecord coefficients;
};

using TwoPrecObserver = std::function<void(const TwoPrecStep&)>;

/// Residual minimization over the previous (A., A.)-orthonormal directions
/// plus the two preconditioned residuals M1^{-1} r_m, M2^{-1} r_m. Each step
/// solves a 2x2 Gram system for the new coefficients.
SolveResult gmres_two_prec(const LinearOperator& a, const TwoPreconditioners& precs,
                           std::span<const double> b, std::span<const double> x0,
                           const GmresConfig& cfg, const TwoPrecObserver& observer = {});

/// Solution of the 2x2 Gram system
///   [g11 g12; g12 g22] [a1; a2] = [r1; r2].
/// `mode` is 0 for the full solve, 1/2 when only the first/second direction
/// is used (near-singular Gram matrix), 3 when both directions vanish.
struct GramSolution {
  double first = 0.0;
  double second = 0.0;
  int mode = 0;
};
GramSolution solve_gram(double g11, double g12, double g22, double r1, double r2,
                        double scale);

/// history[last] / history[last - 1].
double residual_rate(const SolveReport& report);

}  // namespace dgasm
