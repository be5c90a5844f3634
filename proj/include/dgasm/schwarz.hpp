#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dgasm/dg.hpp"
#include "dgasm/krylov.hpp"
#include "dgasm/mesh.hpp"
#include "dgasm/sparse.hpp"

namespace dgasm {

struct Rect {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

/// px-by-py grid of rectangular subdomains, each grown by one fine mesh size
/// on every side (clipped to the unit square). A subdomain owns every element
/// whose closure lies in its grown rectangle, and every dof of those elements.
struct SubdomainPartition {
  std::size_t px = 1;
  std::size_t py = 1;
  double overlap = 0.0;
  std::vector<Rect> cores;
  std::vector<Rect> extended;
  std::vector<std::vector<std::size_t>> elements;  // sorted
  std::vector<std::vector<std::size_t>> dofs;      // sorted

  std::size_t size() const noexcept { return cores.size(); }
};

/// Splits ns = px * py with |px - py| minimal and px >= py (px counts
/// subdomains along x). Both must divide 2^level.
SubdomainPartition build_partition(const TriMesh& mesh, std::size_t ns);

/// CSV: subdomain,x0,x1,y0,y1,elements,dofs (extended rectangle).
void write_partition_csv(const SubdomainPartition& partition, std::ostream& out);

/// Coarse-to-fine injection for nested DG spaces: row = fine dof, entries =
/// the coarse basis functions of the parent element evaluated at the fine node.
CsrMatrix build_prolongation(const DgSpace& fine, const DgSpace& coarse, const NestingMap& nesting);

enum class CoarseSolve { direct, iterative };

struct CoarseOptions {
  CoarseSolve mode = CoarseSolve::direct;
  double rel_tol = 1e-10;     // iterative mode only
  std::size_t restart = 20;   // iterative mode only
  std::size_t max_iter = 20000;
};

enum class CoarseForm { iipg, symmetric };

/// Coarse correction P A_H^{-1} P^T with A_H rediscretized on the coarse mesh
/// with penalty fine_penalty * H / h.
class CoarseOperator {
 public:
  CoarseOperator(const DgSpace& fine, int coarse_level, CoarseForm form, double fine_penalty,
                 CoarseOptions options = {});

  /// out += P A_H^{-1} P^T r  (A_H^{-T} when `transpose`).
  void apply_add(std::span<const double> r, std::span<double> out, bool transpose) const;

  const DgSpace& space() const noexcept { return space_; }
  const CsrMatrix& prolongation() const noexcept { return prolongation_; }
  const CsrMatrix& matrix() const noexcept { return matrix_; }
  double penalty() const noexcept { return penalty_; }
  const CoarseOptions& options() const noexcept { return options_; }

 private:
  DgSpace space_;
  CsrMatrix prolongation_;
  CsrMatrix matrix_;
  double penalty_;
  CoarseOptions options_;
  std::optional<LuFactors> lu_;
};

struct SchwarzOptions {
  std::size_t threads = 1;
};

/// Two-level additive Schwarz
///   B^{-1} = P A_H^{-1} P^T + sum_k I_k A_k^{-1} I_k^T,   A_k = I_k^T A I_k,
/// with the transposed action and, when A0 is attached,
///   Z^{-1} = B^{-T} A0 B^{-1}.
/// Contributions are summed coarse first, then in subdomain order, so results
/// do not depend on the thread count.
class SchwarzPreconditioner {
 public:
  SchwarzPreconditioner(const CsrMatrix& a, const SubdomainPartition& partition,
                        std::shared_ptr<const CoarseOperator> coarse,
                        std::shared_ptr<const CsrMatrix> a0, SchwarzOptions options = {});

  std::size_t size() const noexcept { return n_; }
  std::size_t num_subdomains() const noexcept { return dofs_.size(); }
  bool has_coarse() const noexcept { return coarse_ != nullptr; }
  bool has_symmetric() const noexcept { return a0_ != nullptr; }

  void apply(std::span<const double> r, std::span<double> out) const;
  void apply_transpose(std::span<const double> r, std::span<double> out) const;
  /// B^{-T} A0 B^{-1} r.
  void apply_z(std::span<const double> r, std::span<double> out) const;
  /// B^{-T} A0 y, for callers that already hold y = B^{-1} r.
  void apply_z_tail(std::span<const double> binv_r, std::span<double> out) const;

  Vector apply(std::span<const double> r) const;
  Vector apply_transpose(std::span<const double> r) const;
  Vector apply_z(std::span<const double> r) const;

  /// Operator views; the preconditioner must outlive them.
  LinearOperator binv() const;
  LinearOperator binv_transpose() const;
  LinearOperator zinv() const;
  LinearOperator zinv_tail() const;

 private:
  void apply_impl(std::span<const double> r, std::span<double> out, bool transpose) const;

  std::size_t n_ = 0;
  std::vector<std::vector<std::size_t>> dofs_;
  std::vector<LuFactors> local_;
  std::shared_ptr<const CoarseOperator> coarse_;
  std::shared_ptr<const CsrMatrix> a0_;
  std::size_t threads_ = 1;
};

SchwarzPreconditioner build_preconditioner(const CsrMatrix& a, std::shared_ptr<const CsrMatrix> a0,
                                           const SubdomainPartition& partition,
                                           std::shared_ptr<const CoarseOperator> coarse,
                                           SchwarzOptions options = {});

/// Symmetric additive Schwarz for A0 with its own coarse form (penalty
/// eta0 * H / h, direct solve). `coarse_level` <= 0 disables the coarse level.
SchwarzPreconditioner build_B0(const CsrMatrix& a0, const SubdomainPartition& partition,
                               const DgSpace& fine, int coarse_level, double eta0,
                               SchwarzOptions options = {});

}  // namespace dgasm
