#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "dgasm/mesh.hpp"
#include "dgasm/sparse.hpp"

namespace dgasm {

/// Linear Lagrange basis function on one triangle: c0 + cx*x + cy*y.
struct P1Basis {
  double c0 = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  double operator()(Point p) const noexcept { return c0 + cx * p.x + cy * p.y; }
  Point gradient() const noexcept { return {cx, cy}; }
};

/// Discontinuous piecewise-linear space. Dofs are element-major: dof(t, i)
/// belongs to vertex i of triangle t.
class DgSpace {
 public:
  static constexpr std::size_t dofs_per_element = 3;

  explicit DgSpace(TriMesh mesh, SideConvention convention = SideConvention::lower_index_plus);

  const TriMesh& mesh() const noexcept { return mesh_; }
  const EdgeSkeleton& skeleton() const noexcept { return skeleton_; }
  std::size_t num_elements() const noexcept { return mesh_.num_triangles(); }
  std::size_t total_dofs() const noexcept { return dofs_per_element * num_elements(); }
  static constexpr std::size_t dof(std::size_t element, std::size_t local) noexcept {
    return dofs_per_element * element + local;
  }
  const std::array<P1Basis, 3>& basis(std::size_t element) const { return basis_[element]; }
  double area(std::size_t element) const { return area_[element]; }

  /// Value of the discrete function `u` on `element` at `p`.
  double evaluate(std::span<const double> u, std::size_t element, Point p) const;

 private:
  TriMesh mesh_;
  EdgeSkeleton skeleton_;
  std::vector<std::array<P1Basis, 3>> basis_;
  std::vector<double> area_;
};

enum FormTerm : unsigned {
  kGradient = 1u << 0,  // sum_K (grad u, grad v)_K
  kFlux = 1u << 1,      // -sum_e ({grad u}, [v])_e
  kPenalty = 1u << 2,   // sum_e eta/|e| ([u], [v])_e
};

/// Matrix with entry (i, j) = a(phi_j, phi_i) for the selected terms.
CsrMatrix assemble_form(const DgSpace& space, unsigned terms, double eta);

/// Incomplete interior penalty form: all three terms, nonsymmetric.
CsrMatrix assemble_iipg(const DgSpace& space, double eta);
/// Gradient + penalty terms only; bit-for-bit symmetric.
CsrMatrix assemble_sym(const DgSpace& space, double eta0);

using ScalarField = std::function<double(Point)>;
using VectorField = std::function<Point(Point)>;

struct ExactSolution {
  ScalarField value;
  VectorField gradient;
};

/// u* = sin(pi x) sin(pi y) and its source f = 2 pi^2 u*.
ExactSolution sine_solution();
double sine_source(Point p);

/// Load vector, integrated with the 6-point degree-4 triangle rule.
Vector assemble_rhs(const DgSpace& space, const ScalarField& source = sine_source);

/// Nodal interpolant of `f` (value of f at each element vertex).
Vector interpolate(const DgSpace& space, const ScalarField& f);

struct ErrorNorms {
  double l2 = 0.0;
  double energy = 0.0;
};

/// L2 error and the DG energy error
///   sqrt( sum_K |grad(u_h - u*)|^2_K + sum_e eta/|e| |[u_h - u*]|^2_e ).
ErrorNorms error_norms(const DgSpace& space, std::span<const double> u_h, double eta = 5.0,
                       const ExactSolution& exact = sine_solution());

/// Symmetric 6-point rule exact for degree 4 on triangles. Points are
/// barycentric, weights sum to 1 (multiply by the area).
struct TriangleQuadrature {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};
const TriangleQuadrature& degree4_rule();

}  // namespace dgasm
