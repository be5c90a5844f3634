#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dgasm/krylov.hpp"
#include "dgasm/sparse.hpp"

namespace dgasm {

using DenseMatrix = Eigen::MatrixXd;

constexpr std::size_t kDenseLimit = 4000;

DenseMatrix to_dense(const CsrMatrix& m);

/// Column-by-column image of the canonical basis. Columns are computed on up
/// to `threads` workers; the operator must be safe for concurrent calls.
DenseMatrix densify(const LinearOperator& op, std::size_t threads = 1);

/// Coercivity and boundedness of M relative to an SPD reference M0:
///   v^T M v >= c0 v^T M0 v,   w^T M v <= c1 |v|_{M0} |w|_{M0}.
struct H0Constants {
  double c0 = 0.0;
  double c1 = 0.0;
};

/// c0 = lambda_min(L^{-1} sym(M) L^{-T}), c1 = sigma_max(L^{-1} M L^{-T})
/// with M0 = L L^T. Throws InvalidArgument when n > n_limit or M0 is not SPD.
H0Constants measure_h0(const DenseMatrix& m, const DenseMatrix& m0,
                       std::size_t n_limit = kDenseLimit);

/// Constants of (M^{-1}, M0^{-1}) against the bounds (c0 / c1^2, 1 / c0).
struct InversePairReport {
  H0Constants given;
  H0Constants measured;
  double lower_bound = 0.0;  // c0 / c1^2
  double upper_bound = 0.0;  // 1 / c0
  double lower_slack = 0.0;  // measured.c0 - lower_bound
  double upper_slack = 0.0;  // upper_bound - measured.c1
  bool passed = false;
};

InversePairReport verify_inverse_pair(const H0Constants& c, const DenseMatrix& m,
                                      const DenseMatrix& m0, double tol = 1e-8,
                                      std::size_t n_limit = kDenseLimit);

/// Dense inverse of a square matrix via partial-pivoting LU.
DenseMatrix dense_inverse(const DenseMatrix& m);

/// Measured constants of the preconditioner chain and the closed-form values
/// implied by (c0, c1, gamma0, gamma1).
struct ChainConstants {
  H0Constants a_a0;                // (A, A0): c0, c1
  double gamma0 = 0.0, gamma1 = 0.0;  // gamma0 B0 <= A0 <= gamma1 B0
  double beta0 = 0.0, beta1 = 0.0;    // (B, A0)
  double alpha0 = 0.0, alpha1 = 0.0;  // (A, Z)

  // Closed forms from (c0, c1, gamma0, gamma1) of `a_a0`.
  double beta0_bound = 0.0;       // c0^3 / (c1^2 gamma1)
  double beta1_bound = 0.0;       // c1^2 / (c0 gamma0)
  double alpha0_bound = 0.0;      // c0 / beta1_bound = c0^2 gamma0 / c1^2
  double alpha1_printed = 0.0;    // c1^2 / (c0^3 gamma1)
  double alpha1_consistent = 0.0; // c1 / beta0_bound = c1^3 gamma1 / c0^3
};

/// Closed forms of ChainConstants for given (c0, c1, gamma0, gamma1).
void fill_chain_bounds(ChainConstants& chain, const H0Constants& c, double gamma0,
                       double gamma1);

/// All operators are densified; `binv`, `b0inv`, `zinv` are inverse actions.
ChainConstants measure_chain(const DenseMatrix& a, const DenseMatrix& a0,
                             const DenseMatrix& binv, const DenseMatrix& b0inv,
                             const DenseMatrix& zinv, std::size_t n_limit = kDenseLimit);

/// Contraction per step of the weighted-norm bound for Z-preconditioned
/// GMRES: history[m] <= q^m history[0] with q = sqrt(1 - sqrt(alpha0/alpha1)).
double estimate0_factor(double alpha0, double alpha1);

struct Estimate0Report {
  bool holds = false;
  double factor = 0.0;
  std::size_t tightest_m = 0;   // argmax of history[m] / bound[m]
  double tightest_ratio = 0.0;  // that maximum
  std::optional<std::size_t> first_violation;
};

Estimate0Report check_estimate0(const std::vector<double>& history, double alpha0,
                                double alpha1, double rel_slack = 1e-9);

/// min over sigma of |r - sigma q| in the inner product (u, v) = u^T W v, with
/// W applied by `weight` (Euclidean when absent).
double one_step_minimum(std::span<const double> r, std::span<const double> q,
                        const std::optional<LinearOperator>& weight);

}  // namespace dgasm
