#include "dgasm/schwarz.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "dgasm/parallel.hpp"

namespace dgasm {

SubdomainPartition build_partition(const TriMesh& mesh, std::size_t ns) {
  if (ns == 0) throw InvalidArgument("build_partition: ns must be >= 1");
  if (mesh.level < 1) throw InvalidArgument("build_partition: mesh must be structured");
  const std::size_t cells = std::size_t{1} << mesh.level;

  std::size_t py = static_cast<std::size_t>(std::sqrt(static_cast<double>(ns)));
  while (py > 1 && ns % py != 0) --py;
  while ((py + 1) * (py + 1) <= ns && ns % (py + 1) == 0) ++py;
  const std::size_t px = ns / py;
  if (cells % px != 0 || cells % py != 0)
    throw InvalidArgument("build_partition: " + std::to_string(ns) + " subdomains as " +
                          std::to_string(px) + "x" + std::to_string(py) + " do not divide a " +
                          std::to_string(cells) + "x" + std::to_string(cells) + " grid");

  SubdomainPartition part;
  part.px = px;
  part.py = py;
  part.overlap = mesh.h;
  const double tol = 1e-9 * mesh.h;
  for (std::size_t j = 0; j < py; ++j) {
    for (std::size_t i = 0; i < px; ++i) {
      Rect core{static_cast<double>(i) / static_cast<double>(px),
                static_cast<double>(i + 1) / static_cast<double>(px),
                static_cast<double>(j) / static_cast<double>(py),
                static_cast<double>(j + 1) / static_cast<double>(py)};
      Rect ext{std::max(0.0, core.x0 - mesh.h), std::min(1.0, core.x1 + mesh.h),
               std::max(0.0, core.y0 - mesh.h), std::min(1.0, core.y1 + mesh.h)};
      std::vector<std::size_t> elements;
      for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        bool inside = true;
        for (const Point& p : mesh.corners(t))
          inside = inside && p.x >= ext.x0 - tol && p.x <= ext.x1 + tol && p.y >= ext.y0 - tol &&
                   p.y <= ext.y1 + tol;
        if (inside) elements.push_back(t);
      }
      std::vector<std::size_t> dofs;
      dofs.reserve(3 * elements.size());
      for (auto t : elements)
        for (std::size_t l = 0; l < DgSpace::dofs_per_element; ++l) dofs.push_back(DgSpace::dof(t, l));
      part.cores.push_back(core);
      part.extended.push_back(ext);
      part.elements.push_back(std::move(elements));
      part.dofs.push_back(std::move(dofs));
    }
  }
  return part;
}

void write_partition_csv(const SubdomainPartition& partition, std::ostream& out) {
  out << "subdomain,x0,x1,y0,y1,elements,dofs\n";
  for (std::size_t k = 0; k < partition.size(); ++k) {
    const auto& r = partition.extended[k];
    out << k << ',' << r.x0 << ',' << r.x1 << ',' << r.y0 << ',' << r.y1 << ','
        << partition.elements[k].size() << ',' << partition.dofs[k].size() << '\n';
  }
}

CsrMatrix build_prolongation(const DgSpace& fine, const DgSpace& coarse, const NestingMap& nesting) {
  if (nesting.parent.size() != fine.num_elements())
    throw DimensionMismatch("build_prolongation nesting", fine.num_elements(), nesting.parent.size());
  std::vector<Triplet> t;
  t.reserve(9 * fine.num_elements());
  for (std::size_t k = 0; k < fine.num_elements(); ++k) {
    const std::size_t parent = nesting.parent[k];
    const auto& cb = coarse.basis(parent);
    const auto corners = fine.mesh().corners(k);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double v = cb[j](corners[i]);
        if (v != 0.0) t.push_back({DgSpace::dof(k, i), DgSpace::dof(parent, j), v});
      }
  }
  return CsrMatrix::from_triplets(fine.total_dofs(), coarse.total_dofs(), std::move(t));
}

// ---------------------------------------------------------------------------

CoarseOperator::CoarseOperator(const DgSpace& fine, int coarse_level, CoarseForm form,
                               double fine_penalty, CoarseOptions options)
    : space_([&] {
        if (coarse_level >= fine.mesh().level)
          throw InvalidArgument("CoarseOperator: coarse level " + std::to_string(coarse_level) +
                                " is not coarser than fine level " +
                                std::to_string(fine.mesh().level));
        return DgSpace(build_structured_mesh(coarse_level));
      }()),
      penalty_(fine_penalty * space_.mesh().h / fine.mesh().h),
      options_(options) {
  if (options_.mode == CoarseSolve::iterative && !(options_.rel_tol > 0.0 && options_.rel_tol < 1.0))
    throw InvalidArgument("CoarseOperator: rel_tol must lie in (0, 1)");
  prolongation_ = build_prolongation(fine, space_, build_nesting(fine.mesh(), space_.mesh()));
  matrix_ = form == CoarseForm::iipg ? assemble_iipg(space_, penalty_) : assemble_sym(space_, penalty_);
  if (options_.mode == CoarseSolve::direct) {
    try {
      lu_.emplace(matrix_);
    } catch (const SingularMatrix& e) {
      throw SingularMatrix("coarse operator", e.pivot());
    }
  }
}

void CoarseOperator::apply_add(std::span<const double> r, std::span<double> out, bool transpose) const {
  const Vector rc = spmv_transpose(prolongation_, r);
  Vector yc(rc.size(), 0.0);
  if (lu_) {
    transpose ? lu_->solve_transpose(rc, yc) : lu_->solve(rc, yc);
  } else {
    GmresConfig cfg;
    cfg.rel_tol = options_.rel_tol;
    cfg.restart = options_.restart;
    cfg.max_iter = options_.max_iter;
    cfg.record_history = false;
    const auto op = transpose ? make_transpose_operator(matrix_) : make_operator(matrix_);
    yc = gmres_right(op, identity_operator(rc.size()), rc, yc, cfg).x;
  }
  const Vector y = spmv(prolongation_, yc);
  axpy(1.0, y, out);
}

// ---------------------------------------------------------------------------

SchwarzPreconditioner::SchwarzPreconditioner(const CsrMatrix& a, const SubdomainPartition& partition,
                                             std::shared_ptr<const CoarseOperator> coarse,
                                             std::shared_ptr<const CsrMatrix> a0,
                                             SchwarzOptions options)
    : n_(a.nrows()),
      dofs_(partition.dofs),
      coarse_(std::move(coarse)),
      a0_(std::move(a0)),
      threads_(std::max<std::size_t>(1, options.threads)) {
  if (a.nrows() != a.ncols()) throw InvalidArgument("build_preconditioner: matrix is not square");
  if (coarse_ && coarse_->prolongation().nrows() != n_)
    throw DimensionMismatch("build_preconditioner coarse prolongation", n_,
                            coarse_->prolongation().nrows());
  if (a0_ && (a0_->nrows() != n_ || a0_->ncols() != n_))
    throw DimensionMismatch("build_preconditioner A0", n_, a0_->nrows());
  for (const auto& d : dofs_)
    if (!d.empty() && d.back() >= n_)
      throw DimensionMismatch("build_preconditioner partition dofs", n_, d.back() + 1);

  std::vector<std::optional<LuFactors>> factors(dofs_.size());
  parallel_for(dofs_.size(), threads_, [&](std::size_t k) {
    try {
      factors[k].emplace(a.principal_submatrix(dofs_[k]));
    } catch (const SingularMatrix& e) {
      throw SingularMatrix("subdomain " + std::to_string(k), dofs_[k][e.pivot()]);
    }
  });
  local_.reserve(factors.size());
  for (auto& f : factors) local_.push_back(std::move(*f));
}

void SchwarzPreconditioner::apply_impl(std::span<const double> r, std::span<double> out,
                                       bool transpose) const {
  if (r.size() != n_) throw DimensionMismatch("Schwarz apply input", n_, r.size());
  if (out.size() != n_) throw DimensionMismatch("Schwarz apply output", n_, out.size());
  const std::size_t ns = dofs_.size();
  std::vector<Vector> local(ns);
  Vector coarse_part;
  const std::size_t tasks = ns + (coarse_ ? 1 : 0);
  parallel_for(tasks, threads_, [&](std::size_t k) {
    if (k == ns) {
      coarse_part.assign(n_, 0.0);
      coarse_->apply_add(r, coarse_part, transpose);
      return;
    }
    const auto& idx = dofs_[k];
    Vector rk(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) rk[i] = r[idx[i]];
    local[k].resize(idx.size());
    transpose ? local_[k].solve_transpose(rk, local[k]) : local_[k].solve(rk, local[k]);
  });
  if (coarse_)
    std::copy(coarse_part.begin(), coarse_part.end(), out.begin());
  else
    std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& idx = dofs_[k];
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] += local[k][i];
  }
}

void SchwarzPreconditioner::apply(std::span<const double> r, std::span<double> out) const {
  apply_impl(r, out, false);
}

void SchwarzPreconditioner::apply_transpose(std::span<const double> r, std::span<double> out) const {
  apply_impl(r, out, true);
}

void SchwarzPreconditioner::apply_z_tail(std::span<const double> binv_r, std::span<double> out) const {
  if (!a0_) throw InvalidArgument("apply_z: no symmetric matrix A0 attached");
  const Vector t = spmv(*a0_, binv_r);
  apply_impl(t, out, true);
}

void SchwarzPreconditioner::apply_z(std::span<const double> r, std::span<double> out) const {
  if (!a0_) throw InvalidArgument("apply_z: no symmetric matrix A0 attached");
  Vector y(n_);
  apply_impl(r, y, false);
  apply_z_tail(y, out);
}

Vector SchwarzPreconditioner::apply(std::span<const double> r) const {
  Vector out(n_);
  apply(r, out);
  return out;
}

Vector SchwarzPreconditioner::apply_transpose(std::span<const double> r) const {
  Vector out(n_);
  apply_transpose(r, out);
  return out;
}

Vector SchwarzPreconditioner::apply_z(std::span<const double> r) const {
  Vector out(n_);
  apply_z(r, out);
  return out;
}

LinearOperator SchwarzPreconditioner::binv() const {
  return {n_, [this](std::span<const double> in, std::span<double> out) { apply(in, out); }};
}

LinearOperator SchwarzPreconditioner::binv_transpose() const {
  return {n_, [this](std::span<const double> in, std::span<double> out) { apply_transpose(in, out); }};
}

LinearOperator SchwarzPreconditioner::zinv() const {
  if (!a0_) throw InvalidArgument("zinv: no symmetric matrix A0 attached");
  return {n_, [this](std::span<const double> in, std::span<double> out) { apply_z(in, out); }};
}

LinearOperator SchwarzPreconditioner::zinv_tail() const {
  if (!a0_) throw InvalidArgument("zinv_tail: no symmetric matrix A0 attached");
  return {n_, [this](std::span<const double> in, std::span<double> out) { apply_z_tail(in, out); }};
}

SchwarzPreconditioner build_preconditioner(const CsrMatrix& a, std::shared_ptr<const CsrMatrix> a0,
                                           const SubdomainPartition& partition,
                                           std::shared_ptr<const CoarseOperator> coarse,
                                           SchwarzOptions options) {
  return SchwarzPreconditioner(a, partition, std::move(coarse), std::move(a0), options);
}

SchwarzPreconditioner build_B0(const CsrMatrix& a0, const SubdomainPartition& partition,
                               const DgSpace& fine, int coarse_level, double eta0,
                               SchwarzOptions options) {
  std::shared_ptr<const CoarseOperator> coarse;
  if (coarse_level > 0)
    coarse = std::make_shared<const CoarseOperator>(fine, coarse_level, CoarseForm::symmetric, eta0);
  return SchwarzPreconditioner(a0, partition, std::move(coarse), nullptr, options);
}

}  // namespace dgasm
