#include "dgasm/dg.hpp"

#include <cmath>
#include <numbers>

namespace dgasm {

namespace {

std::array<P1Basis, 3> p1_basis(const std::array<Point, 3>& v) {
  const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
  std::array<P1Basis, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Point& b = v[(i + 1) % 3];
    const Point& c = v[(i + 2) % 3];
    out[i].c0 = (b.x * c.y - c.x * b.y) / det;
    out[i].cx = (b.y - c.y) / det;
    out[i].cy = (c.x - b.x) / det;
  }
  return out;
}

struct EdgeRule {
  std::array<Point, 3> points;
  std::array<double, 3> weights;
  int size;
};

// Gauss-Legendre on an edge. Two points integrate the P1 x P1 products of the
// bilinear forms exactly; three are used for error integrals.
EdgeRule edge_gauss(Point a, Point b, double length, int npoints) {
  EdgeRule r{};
  r.size = npoints;
  const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  const Point half{0.5 * (b.x - a.x), 0.5 * (b.y - a.y)};
  auto at = [&](double xi) { return Point{mid.x + xi * half.x, mid.y + xi * half.y}; };
  if (npoints == 2) {
    const double xi = 1.0 / std::sqrt(3.0);
    r.points = {at(-xi), at(xi), {}};
    r.weights = {0.5 * length, 0.5 * length, 0.0};
  } else {
    const double xi = std::sqrt(0.6);
    r.points = {at(-xi), at(0.0), at(xi)};
    r.weights = {5.0 / 18.0 * length, 8.0 / 18.0 * length, 5.0 / 18.0 * length};
  }
  return r;
}

Point at_barycentric(const std::array<Point, 3>& v, const std::array<double, 3>& l) {
  return {l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
          l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y};
}

}  // namespace

DgSpace::DgSpace(TriMesh mesh, SideConvention convention)
    : mesh_(std::move(mesh)), skeleton_(build_skeleton(mesh_, convention)) {
  basis_.reserve(mesh_.num_triangles());
  area_.reserve(mesh_.num_triangles());
  for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
    const double a = mesh_.signed_area(t);
    if (!(a > 0.0)) throw InvalidArgument("DgSpace: triangle " + std::to_string(t) +
                                          " is degenerate or clockwise");
    basis_.push_back(p1_basis(mesh_.corners(t)));
    area_.push_back(a);
  }
}

double DgSpace::evaluate(std::span<const double> u, std::size_t element, Point p) const {
  const auto& b = basis_[element];
  return u[dof(element, 0)] * b[0](p) + u[dof(element, 1)] * b[1](p) + u[dof(element, 2)] * b[2](p);
}

CsrMatrix assemble_form(const DgSpace& space, unsigned terms, double eta) {
  if ((terms & kPenalty) && !(eta > 0.0))
    throw InvalidArgument("assemble_form: penalty parameter must be positive");
  const auto& mesh = space.mesh();
  const std::size_t n = space.total_dofs();
  std::vector<Triplet> t;
  t.reserve(9 * space.num_elements() + 36 * space.skeleton().edges.size());

  if (terms & kGradient) {
    for (std::size_t k = 0; k < space.num_elements(); ++k) {
      const auto& b = space.basis(k);
      const double area = space.area(k);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          t.push_back({DgSpace::dof(k, i), DgSpace::dof(k, j),
                       area * (b[i].cx * b[j].cx + b[i].cy * b[j].cy)});
    }
  }

  if (terms & (kFlux | kPenalty)) {
    for (const auto& e : space.skeleton().edges) {
      const auto rule = edge_gauss(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]],
                                   e.length, 2);
      const std::size_t nsides = e.is_boundary() ? 1 : 2;
      const std::array<std::size_t, 2> elem{e.plus, e.minus.value_or(e.plus)};
      const std::array<double, 2> sign{1.0, -1.0};
      const double avg = e.is_boundary() ? 1.0 : 0.5;

      // phi[s][i][q]: basis i of side s at quadrature point q
      double phi[2][3][2];
      for (std::size_t s = 0; s < nsides; ++s)
        for (std::size_t i = 0; i < 3; ++i)
          for (int q = 0; q < 2; ++q) phi[s][i][q] = space.basis(elem[s])[i](rule.points[q]);

      for (std::size_t sv = 0; sv < nsides; ++sv) {
        for (std::size_t iv = 0; iv < 3; ++iv) {
          const double v_mean = rule.weights[0] * phi[sv][iv][0] + rule.weights[1] * phi[sv][iv][1];
          for (std::size_t su = 0; su < nsides; ++su) {
            for (std::size_t iu = 0; iu < 3; ++iu) {
              double value = 0.0;
              if (terms & kFlux) {
                const auto& bu = space.basis(elem[su])[iu];
                const double dn = bu.cx * e.normal.x + bu.cy * e.normal.y;
                value -= avg * dn * sign[sv] * v_mean;
              }
              if (terms & kPenalty) {
                const double uv = rule.weights[0] * (phi[su][iu][0] * phi[sv][iv][0]) +
                                  rule.weights[1] * (phi[su][iu][1] * phi[sv][iv][1]);
                value += (eta / e.length) * ((sign[su] * sign[sv]) * uv);
              }
              t.push_back({DgSpace::dof(elem[sv], iv), DgSpace::dof(elem[su], iu), value});
            }
          }
        }
      }
    }
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

CsrMatrix assemble_iipg(const DgSpace& space, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("assemble_iipg: eta must be positive");
  return assemble_form(space, kGradient | kFlux | kPenalty, eta);
}

CsrMatrix assemble_sym(const DgSpace& space, double eta0) {
  if (!(eta0 > 0.0)) throw InvalidArgument("assemble_sym: eta0 must be positive");
  return assemble_form(space, kGradient | kPenalty, eta0);
}

ExactSolution sine_solution() {
  using std::numbers::pi;
  return {[](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); },
          [](Point p) {
            return Point{pi * std::cos(pi * p.x) * std::sin(pi * p.y),
                         pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
          }};
}

double sine_source(Point p) {
  using std::numbers::pi;
  return 2.0 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y);
}

const TriangleQuadrature& degree4_rule() {
  static const TriangleQuadrature rule = [] {
    constexpr double a1 = 0.44594849091596488632;
    constexpr double w1 = 0.22338158967801146570;
    constexpr double a2 = 0.091576213509770743460;
    constexpr double b1 = 1.0 - 2.0 * a1;
    constexpr double b2 = 1.0 - 2.0 * a2;
    constexpr double w2 = 1.0 / 3.0 - w1;
    TriangleQuadrature q;
    q.points = {{a1, a1, b1}, {a1, b1, a1}, {b1, a1, a1},
                {a2, a2, b2}, {a2, b2, a2}, {b2, a2, a2}};
    q.weights = {w1, w1, w1, w2, w2, w2};
    return q;
  }();
  return rule;
}

Vector assemble_rhs(const DgSpace& space, const ScalarField& source) {
  const auto& rule = degree4_rule();
  Vector f(space.total_dofs(), 0.0);
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const auto v = space.mesh().corners(k);
    const auto& b = space.basis(k);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point p = at_barycentric(v, rule.points[q]);
      const double fw = space.area(k) * rule.weights[q] * source(p);
      for (std::size_t i = 0; i < 3; ++i) f[DgSpace::dof(k, i)] += fw * b[i](p);
    }
  }
  return f;
}

Vector interpolate(const DgSpace& space, const ScalarField& f) {
  Vector u(space.total_dofs());
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const auto v = space.mesh().corners(k);
    for (std::size_t i = 0; i < 3; ++i) u[DgSpace::dof(k, i)] = f(v[i]);
  }
  return u;
}

ErrorNorms error_norms(const DgSpace& space, std::span<const double> u_h, double eta,
                       const ExactSolution& exact) {
  if (u_h.size() != space.total_dofs())
    throw DimensionMismatch("error_norms", space.total_dofs(), u_h.size());
  const auto& rule = degree4_rule();
  double l2 = 0.0, grad = 0.0, jump = 0.0;
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const auto v = space.mesh().corners(k);
    const auto& b = space.basis(k);
    Point gh{0.0, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
      gh.x += u_h[DgSpace::dof(k, i)] * b[i].cx;
      gh.y += u_h[DgSpace::dof(k, i)] * b[i].cy;
    }
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point p = at_barycentric(v, rule.points[q]);
      const double w = space.area(k) * rule.weights[q];
      const double e = space.evaluate(u_h, k, p) - exact.value(p);
      const Point ge = exact.gradient(p);
      l2 += w * e * e;
      grad += w * ((gh.x - ge.x) * (gh.x - ge.x) + (gh.y - ge.y) * (gh.y - ge.y));
    }
  }
  const auto& mesh = space.mesh();
  for (const auto& e : space.skeleton().edges) {
    const auto rule3 = edge_gauss(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]],
                                  e.length, 3);
    double s = 0.0;
    for (int q = 0; q < rule3.size; ++q) {
      const Point p = rule3.points[q];
      const double ex = exact.value(p);
      double j = space.evaluate(u_h, e.plus, p) - ex;
      if (e.minus) j -= space.evaluate(u_h, *e.minus, p) - ex;
      s += rule3.weights[q] * j * j;
    }
    jump += eta / e.length * s;
  }
  return {std::sqrt(l2), std::sqrt(grad + jump)};
}

}  // namespace dgasm
