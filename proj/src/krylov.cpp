#include "dgasm/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace dgasm {

LinearOperator make_operator(const CsrMatrix& m) {
  if (m.nrows() != m.ncols()) throw InvalidArgument("make_operator: matrix is not square");
  return {m.nrows(), [&m](std::span<const double> in, std::span<double> out) { spmv(m, in, out); }};
}

LinearOperator make_transpose_operator(const CsrMatrix& m) {
  if (m.nrows() != m.ncols()) throw InvalidArgument("make_transpose_operator: matrix is not square");
  return {m.nrows(),
          [&m](std::span<const double> in, std::span<double> out) { spmv_transpose(m, in, out); }};
}

LinearOperator identity_operator(std::size_t n) {
  return {n, [](std::span<const double> in, std::span<double> out) {
            std::copy(in.begin(), in.end(), out.begin());
          }};
}

void GmresConfig::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("GmresConfig: rel_tol must lie in (0, 1)");
  if (restart && *restart == 0) throw InvalidArgument("GmresConfig: restart must be >= 1");
  if (weight_inverse && !weight_inverse->apply)
    throw InvalidArgument("GmresConfig: weight_inverse has no apply function");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::stagnation: return "stagnation";
  }
  return "unknown";
}

double residual_rate(const SolveReport& report) {
  const auto& h = report.residual_history;
  if (h.size() < 2) throw InvalidArgument("residual_rate: need at least two history entries");
  return h[h.size() - 1] / h[h.size() - 2];
}

namespace {

using Clock = std::chrono::steady_clock;

// Inner product (u, v) = u^T W^{-1} v, or the Euclidean one when no weight is
// configured. Callers keep W^{-1} v alongside v ("dual") so that each vector
// is weighted only once.
class NormSpace {
 public:
  explicit NormSpace(const std::optional<LinearOperator>& w) : w_(w ? &*w : nullptr) {}

  bool weighted() const { return w_ != nullptr; }

  Vector dual(std::span<const double> v) const {
    if (!w_) return {};
    Vector out(v.size());
    w_->apply(v, out);
    return out;
  }

  // dual_v is ignored in the Euclidean case.
  double inner(std::span<const double> u, std::span<const double> v,
               std::span<const double> dual_v) const {
    return dot(u, w_ ? dual_v : v);
  }

  double norm(std::span<const double> v, std::span<const double> dual_v) const {
    return std::sqrt(std::max(0.0, inner(v, v, dual_v)));
  }

 private:
  const LinearOperator* w_;
};

Vector residual(const LinearOperator& a, std::span<const double> b, std::span<const double> x) {
  Vector r(b.size());
  a.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return r;
}

void check_sizes(const LinearOperator& a, std::size_t m_size, std::span<const double> b,
                 std::span<const double> x0, const char* who) {
  if (m_size != a.size) throw DimensionMismatch(std::string(who) + " preconditioner", a.size, m_size);
  if (b.size() != a.size) throw DimensionMismatch(std::string(who) + " rhs", a.size, b.size());
  if (x0.size() != a.size) throw DimensionMismatch(std::string(who) + " x0", a.size, x0.size());
}

void finish(SolveReport& rep, Clock::time_point start) {
  if (rep.residual_history.size() >= 2) rep.convergence_rate = residual_rate(rep);
  rep.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------

SolveResult gmres_right(const LinearOperator& a, const LinearOperator& precond,
                        std::span<const double> b, std::span<const double> x0,
                        const GmresConfig& cfg) {
  cfg.validate();
  check_sizes(a, precond.size, b, x0, "gmres_right");
  const auto start = Clock::now();
  const NormSpace ns(cfg.weight_inverse);

  SolveResult out{Vector(x0.begin(), x0.end()), {}};
  auto& rep = out.report;
  Vector r = residual(a, b, out.x);
  Vector wr = ns.dual(r);
  const double r0 = ns.norm(r, wr);
  rep.residual_history.push_back(r0);
  if (r0 == 0.0) {
    rep.converged = true;
    rep.reason = StopReason::converged;
    finish(rep, start);
    return out;
  }
  const double target = cfg.rel_tol * r0;

  while (true) {
    const std::size_t remaining = cfg.max_iter - rep.iterations;
    const std::size_t m = std::min(cfg.restart.value_or(remaining), remaining);
    std::vector<Vector> v, wv, z;
    v.reserve(m + 1);
    z.reserve(m);
    std::vector<std::vector<double>> hcol;  // Hessenberg columns, already rotated
    const double cycle_start = ns.norm(r, wr);
    std::vector<double> cs, sn, g{cycle_start};

    v.emplace_back(r);
    for (auto& e : v.back()) e /= g[0];
    if (ns.weighted()) {
      wv.emplace_back(wr);
      for (auto& e : wv.back()) e /= g[0];
    }

    bool breakdown = false;
    for (std::size_t j = 0; j < m; ++j) {
      z.push_back(precond(v[j]));
      Vector w = a(z[j]);
      Vector ww = ns.dual(w);
      const double w_start = ns.norm(w, ww);
      std::vector<double> h(j + 2, 0.0);
      for (std::size_t i = 0; i <= j; ++i) {
        h[i] = ns.inner(w, v[i], ns.weighted() ? std::span<const double>(wv[i]) : std::span<const double>{});
        axpy(-h[i], v[i], w);
        if (ns.weighted()) axpy(-h[i], wv[i], ww);
      }
      h[j + 1] = ns.norm(w, ww);

      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * h[i] + sn[i] * h[i + 1];
        h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
        h[i] = t;
      }
      const double hn = h[j + 1];
      const double denom = std::hypot(h[j], hn);
      const double c = denom == 0.0 ? 1.0 : h[j] / denom;
      const double s = denom == 0.0 ? 0.0 : hn / denom;
      cs.push_back(c);
      sn.push_back(s);
      h[j] = c * h[j] + s * hn;
      h[j + 1] = 0.0;
      g.push_back(-s * g[j]);
      g[j] = c * g[j];
      hcol.push_back(std::move(h));

      ++rep.iterations;
      rep.residual_history.push_back(std::abs(g[j + 1]));

      if (hn <= 1e-14 * w_start) {
        breakdown = true;
        break;
      }
      if (std::abs(g[j + 1]) <= target || rep.iterations >= cfg.max_iter) break;
      v.emplace_back(std::move(w));
      for (auto& e : v.back()) e /= hn;
      if (ns.weighted()) {
        wv.emplace_back(std::move(ww));
        for (auto& e : wv.back()) e /= hn;
      }
    }

    // Back substitution on the rotated Hessenberg system.
    const std::size_t k = hcol.size();
    std::vector<double> y(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double s = g[i];
      for (std::size_t l = i + 1; l < k; ++l) s -= hcol[l][i] * y[l];
      y[i] = hcol[i][i] == 0.0 ? 0.0 : s / hcol[i][i];
    }
    for (std::size_t i = 0; i < k; ++i) axpy(y[i], z[i], out.x);

    r = residual(a, b, out.x);
    wr = ns.dual(r);
    const double true_norm = ns.norm(r, wr);
    rep.residual_history.back() = true_norm;

    if (true_norm <= target) {
      rep.converged = true;
      rep.reason = StopReason::converged;
      break;
    }
    if (rep.iterations >= cfg.max_iter) {
      rep.reason = StopReason::max_iterations;
      break;
    }
    // An invariant preconditioned Krylov space, or a full cycle without any
    // reduction, cannot make further progress.
    if (breakdown || true_norm >= cycle_start * (1.0 - 1e-14)) {
      rep.reason = StopReason::stagnation;
      break;
    }
  }
  finish(rep, start);
  return out;
}

// ---------------------------------------------------------------------------

GramSolution solve_gram(double g11, double g12, double g22, double r1, double r2, double scale) {
  const double vanish = 1e-26 * scale;
  const bool f_ok = g11 > vanish;
  const bool g_ok = g22 > vanish;
  if (!f_ok && !g_ok) return {0.0, 0.0, 3};
  if (f_ok && g_ok) {
    const double det = g11 * g22 - g12 * g12;
    if (det > 1e-14 * g11 * g22) return {(g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det, 0};
  }
  // Dependent or vanishing directions: the system is compatible, so a single
  // direction attains the minimum. Take the one with the larger reduction.
  const double red1 = f_ok ? r1 * r1 / g11 : -1.0;
  const double red2 = g_ok ? r2 * r2 / g22 : -1.0;
  if (red1 >= red2) return {r1 / g11, 0.0, 1};
  return {0.0, r2 / g22, 2};
}

SolveResult gmres_two_prec(const LinearOperator& a, const TwoPreconditioners& precs,
                           std::span<const double> b, std::span<const double> x0,
                           const GmresConfig& cfg, const TwoPrecObserver& observer) {
  cfg.validate();
  check_sizes(a, precs.first.size, b, x0, "gmres_two_prec");
  if (precs.second.size != a.size)
    throw DimensionMismatch("gmres_two_prec second preconditioner", a.size, precs.second.size);
  const auto start = Clock::now();
  const NormSpace ns(cfg.weight_inverse);
  const bool weighted = ns.weighted();

  SolveResult out{Vector(x0.begin(), x0.end()), {}};
  auto& rep = out.report;
  Vector r = residual(a, b, out.x);
  Vector wr = ns.dual(r);
  const double r0 = ns.norm(r, wr);
  rep.residual_history.push_back(r0);
  if (r0 == 0.0) {
    rep.converged = true;
    rep.reason = StopReason::converged;
    finish(rep, start);
    return out;
  }
  const double target = cfg.rel_tol * r0;

  // Current window of directions d_j, their images A d_j, and W^{-1} A d_j.
  std::vector<Vector> d, ad, wad;
  const auto dual_of = [&](const std::vector<Vector>& wlist, std::size_t j) {
    return weighted ? std::span<const double>(wlist[j]) : std::span<const double>{};
  };

  Vector r_before;
  while (true) {
    r_before = r;
    Vector f = precs.first(r);
    Vector g = precs.second_chains_first ? precs.second(f) : precs.second(r);
    Vector af = a(f), ag = a(g);
    Vector waf = ns.dual(af), wag = ns.dual(ag);

    const std::size_t k = d.size();
    std::vector<double> pf(k), pg(k), pr(k);
    Vector af_perp = af, ag_perp = ag, waf_perp = waf, wag_perp = wag;
    for (std::size_t j = 0; j < k; ++j) {
      pf[j] = ns.inner(af, ad[j], dual_of(wad, j));
      pg[j] = ns.inner(ag, ad[j], dual_of(wad, j));
      pr[j] = ns.inner(r, ad[j], dual_of(wad, j));
      axpy(-pf[j], ad[j], af_perp);
      axpy(-pg[j], ad[j], ag_perp);
      if (weighted) {
        axpy(-pf[j], wad[j], waf_perp);
        axpy(-pg[j], wad[j], wag_perp);
      }
    }
    const double g11 = ns.inner(af_perp, af_perp, waf_perp);
    const double g22 = ns.inner(ag_perp, ag_perp, wag_perp);
    const double g12 = ns.inner(af_perp, ag_perp, wag_perp);
    const double rhs1 = ns.inner(r, af_perp, waf_perp);
    const double rhs2 = ns.inner(r, ag_perp, wag_perp);
    const double scale = std::max(ns.inner(af, af, waf), ns.inner(ag, ag, wag));
    const GramSolution sol = solve_gram(g11, g12, g22, rhs1, rhs2, scale);
    if (sol.mode == 3) {
      rep.reason = StopReason::stagnation;
      break;
    }
    const double a1 = sol.first, a2 = sol.second;
    CoefficientRecord coeff{a1, a2, a1 != 0.0 ? a2 / a1 : 0.0};

    // Coefficients on the old directions, then the update over the whole
    // augmented space.
    for (std::size_t j = 0; j < k; ++j) {
      const double alpha_j = pr[j] - a1 * pf[j] - a2 * pg[j];
      axpy(alpha_j, d[j], out.x);
      axpy(-alpha_j, ad[j], r);
      if (weighted) axpy(-alpha_j, wad[j], wr);
    }
    axpy(a1, f, out.x);
    axpy(a2, g, out.x);
    axpy(-a1, af, r);
    axpy(-a2, ag, r);
    if (weighted) {
      axpy(-a1, waf, wr);
      axpy(-a2, wag, wr);
    }

    // New direction from the combined preconditioned residual, made
    // (A., A.)-orthonormal to the window. Second pass restores orthogonality
    // lost to cancellation.
    Vector dn(f.size()), adn(f.size()), wadn;
    for (std::size_t i = 0; i < f.size(); ++i) {
      dn[i] = a1 * f[i] + a2 * g[i];
      adn[i] = a1 * af[i] + a2 * ag[i];
    }
    if (weighted) {
      wadn.resize(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) wadn[i] = a1 * waf[i] + a2 * wag[i];
    }
    const double start_norm = ns.norm(adn, wadn);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        const double beta = ns.inner(adn, ad[j], dual_of(wad, j));
        axpy(-beta, d[j], dn);
        axpy(-beta, ad[j], adn);
        if (weighted) axpy(-beta, wad[j], wadn);
      }
    }
    const double dnorm = ns.norm(adn, wadn);
    const bool added = dnorm > 1e-14 * start_norm && dnorm > 0.0;
    if (added) {
      for (auto& e : dn) e /= dnorm;
      for (auto& e : adn) e /= dnorm;
      for (auto& e : wadn) e /= dnorm;
      d.push_back(std::move(dn));
      ad.push_back(std::move(adn));
      if (weighted) wad.push_back(std::move(wadn));
    }

    ++rep.iterations;
    rep.coefficient_trace.push_back(coeff);
    const double rnorm = ns.norm(r, wr);
    rep.residual_history.push_back(rnorm);

    const bool converged = rnorm <= target;
    const bool window_full = cfg.restart && d.size() >= *cfg.restart;
    const bool stop = converged || rep.iterations >= cfg.max_iter;
    if (observer) {
      TwoPrecStep step;
      step.iteration = rep.iterations;
      step.residual_before = r_before;
      step.residual_after = r;
      step.second_preconditioned = g;
      step.direction_image = added ? std::span<const double>(ad.back()) : std::span<const double>{};
      step.cycle_restarted = window_full && !stop;
      step.coefficients = coeff;
      observer(step);
    }

    if (stop) {
      r = residual(a, b, out.x);
      wr = ns.dual(r);
      const double true_norm = ns.norm(r, wr);
      rep.residual_history.back() = true_norm;
      if (true_norm <= target) {
        rep.converged = true;
        rep.reason = StopReason::converged;
        break;
      }
      if (rep.iterations >= cfg.max_iter) {
        rep.reason = StopReason::max_iterations;
        break;
      }
      // Recurred residual drifted below the target but the true one did not:
      // continue from the true residual with a fresh window.
      d.clear();
      ad.clear();
      wad.clear();
      continue;
    }
    if (window_full) {
      d.clear();
      ad.clear();
      wad.clear();
      r = residual(a, b, out.x);
      wr = ns.dual(r);
    }
  }
  finish(rep, start);
  return out;
}

}  // namespace dgasm
