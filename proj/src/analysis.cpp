#include "dgasm/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "dgasm/errors.hpp"
#include "dgasm/parallel.hpp"

namespace dgasm {

namespace {

void check_square(const DenseMatrix& m, const char* what, std::size_t n_limit) {
  if (m.rows() != m.cols())
    throw DimensionMismatch(what, static_cast<std::size_t>(m.rows()),
                            static_cast<std::size_t>(m.cols()));
  if (static_cast<std::size_t>(m.rows()) > n_limit)
    throw InvalidArgument(std::string(what) + ": dimension " + std::to_string(m.rows()) +
                          " exceeds dense limit " + std::to_string(n_limit));
}

DenseMatrix symmetrized(const DenseMatrix& m) { return 0.5 * (m + m.transpose()); }

// Inverse of an SPD matrix, exactly symmetric.
DenseMatrix spd_inverse(const DenseMatrix& m, const char* what) {
  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + " is not SPD");
  return symmetrized(llt.solve(DenseMatrix::Identity(m.rows(), m.cols())));
}

}  // namespace

DenseMatrix to_dense(const CsrMatrix& m) {
  DenseMatrix d = DenseMatrix::Zero(static_cast<Eigen::Index>(m.nrows()),
                                    static_cast<Eigen::Index>(m.ncols()));
  const auto& off = m.row_offsets();
  const auto& col = m.col_indices();
  const auto& val = m.values();
  for (std::size_t i = 0; i < m.nrows(); ++i)
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[k])) = val[k];
  return d;
}

DenseMatrix densify(const LinearOperator& op, std::size_t threads) {
  const std::size_t n = op.size;
  DenseMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, threads, [&](std::size_t j) {
    Vector e(n, 0.0), y(n);
    e[j] = 1.0;
    op.apply(e, y);
    for (std::size_t i = 0; i < n; ++i)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i];
  });
  return d;
}

H0Constants measure_h0(const DenseMatrix& m, const DenseMatrix& m0, std::size_t n_limit) {
  check_square(m, "measure_h0 matrix", n_limit);
  check_square(m0, "measure_h0 reference", n_limit);
  if (m.rows() != m0.rows())
    throw DimensionMismatch("measure_h0", static_cast<std::size_t>(m0.rows()),
                            static_cast<std::size_t>(m.rows()));
  const double scale = m0.cwiseAbs().maxCoeff();
  if ((m0 - m0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument("measure_h0: reference matrix is not symmetric");
  Eigen::LLT<DenseMatrix> llt(m0);
  if (llt.info() != Eigen::Success) throw InvalidArgument("measure_h0: reference matrix is not SPD");

  // S = L^{-1} M L^{-T}
  const auto l = llt.matrixL();
  DenseMatrix s = l.solve(m);
  s = l.solve(s.transpose()).transpose();

  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(symmetrized(s), Eigen::EigenvaluesOnly);
  Eigen::BDCSVD<DenseMatrix> svd(s);
  return {eig.eigenvalues()(0), svd.singularValues()(0)};
}

DenseMatrix dense_inverse(const DenseMatrix& m) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("dense_inverse", static_cast<std::size_t>(m.rows()),
                            static_cast<std::size_t>(m.cols()));
  Eigen::FullPivLU<DenseMatrix> lu(m);
  if (!lu.isInvertible()) throw SingularMatrix("dense_inverse", static_cast<std::size_t>(lu.rank()));
  return lu.inverse();
}

InversePairReport verify_inverse_pair(const H0Constants& c, const DenseMatrix& m,
                                      const DenseMatrix& m0, double tol, std::size_t n_limit) {
  check_square(m, "verify_inverse_pair matrix", n_limit);
  check_square(m0, "verify_inverse_pair reference", n_limit);
  InversePairReport rep;
  rep.given = c;
  rep.measured = measure_h0(dense_inverse(m), spd_inverse(m0, "verify_inverse_pair reference"),
                            n_limit);
  rep.lower_bound = c.c0 / (c.c1 * c.c1);
  rep.upper_bound = 1.0 / c.c0;
  rep.lower_slack = rep.measured.c0 - rep.lower_bound;
  rep.upper_slack = rep.upper_bound - rep.measured.c1;
  rep.passed = rep.lower_slack >= -tol && rep.upper_slack >= -tol;
  return rep;
}

void fill_chain_bounds(ChainConstants& chain, const H0Constants& c, double gamma0,
                       double gamma1) {
  const double c0 = c.c0, c1 = c.c1;
  chain.beta0_bound = c0 * c0 * c0 / (c1 * c1 * gamma1);
  chain.beta1_bound = c1 * c1 / (c0 * gamma0);
  chain.alpha0_bound = c0 / chain.beta1_bound;
  chain.alpha1_printed = c1 * c1 / (c0 * c0 * c0 * gamma1);
  chain.alpha1_consistent = c1 / chain.beta0_bound;
}

ChainConstants measure_chain(const DenseMatrix& a, const DenseMatrix& a0,
                             const DenseMatrix& binv, const DenseMatrix& b0inv,
                             const DenseMatrix& zinv, std::size_t n_limit) {
  check_square(a, "measure_chain A", n_limit);
  for (const DenseMatrix* m : {&a0, &binv, &b0inv, &zinv})
    if (m->rows() != a.rows() || m->cols() != a.cols())
      throw DimensionMismatch("measure_chain operand", static_cast<std::size_t>(a.rows()),
                              static_cast<std::size_t>(m->rows()));
  ChainConstants chain;
  chain.a_a0 = measure_h0(a, a0, n_limit);

  const H0Constants g = measure_h0(a0, spd_inverse(symmetrized(b0inv), "B0^{-1}"), n_limit);
  chain.gamma0 = g.c0;
  chain.gamma1 = g.c1;

  const H0Constants b = measure_h0(dense_inverse(binv), a0, n_limit);
  chain.beta0 = b.c0;
  chain.beta1 = b.c1;

  const H0Constants z = measure_h0(a, spd_inverse(symmetrized(zinv), "Z^{-1}"), n_limit);
  chain.alpha0 = z.c0;
  chain.alpha1 = z.c1;

  fill_chain_bounds(chain, chain.a_a0, chain.gamma0, chain.gamma1);
  return chain;
}

double estimate0_factor(double alpha0, double alpha1) {
  if (!(alpha0 > 0.0) || !(alpha1 >= alpha0))
    throw InvalidArgument("estimate0 requires 0 < alpha0 <= alpha1");
  return std::sqrt(1.0 - std::sqrt(alpha0 / alpha1));
}

Estimate0Report check_estimate0(const std::vector<double>& history, double alpha0,
                                double alpha1, double rel_slack) {
  if (history.empty()) throw InvalidArgument("check_estimate0: empty history");
  Estimate0Report rep;
  rep.factor = estimate0_factor(alpha0, alpha1);
  rep.holds = true;
  double bound = history[0];
  for (std::size_t m = 0; m < history.size(); ++m) {
    if (m > 0) bound *= rep.factor;
    const double ratio = bound > 0.0 ? history[m] / bound : (history[m] > 0.0 ? INFINITY : 0.0);
    if (m == 0 || ratio > rep.tightest_ratio) {
      rep.tightest_ratio = ratio;
      rep.tightest_m = m;
    }
    if (history[m] > bound * (1.0 + rel_slack) && !rep.first_violation) {
      rep.first_violation = m;
      rep.holds = false;
    }
  }
  return rep;
}

double one_step_minimum(std::span<const double> r, std::span<const double> q,
                        const std::optional<LinearOperator>& weight) {
  if (r.size() != q.size()) throw DimensionMismatch("one_step_minimum", r.size(), q.size());
  double rr, rq, qq;
  if (weight) {
    const Vector wr = (*weight)(r);
    const Vector wq = (*weight)(q);
    rr = dot(r, wr);
    rq = dot(r, wq);
    qq = dot(q, wq);
  } else {
    rr = dot(r, r);
    rq = dot(r, q);
    qq = dot(q, q);
  }
  if (qq <= 0.0) return std::sqrt(std::max(rr, 0.0));
  return std::sqrt(std::max(rr - rq * rq / qq, 0.0));
}

}  // namespace dgasm
