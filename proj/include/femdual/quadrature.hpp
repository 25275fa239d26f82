#pragma once

#include <Eigen/Core>

#include <vector>

#include "femdual/mesh.hpp"

namespace femdual {

/// Quadrature rule on the reference triangle stored in barycentric
/// coordinates; weights sum to one, so element integrals scale by |T|.
struct TriQuadrature {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
};

/// Three-point rule at the edge midpoints, exact through degree 2. This is
/// the rule the discrete forms are built on.
const TriQuadrature& edge_midpoint_rule();

/// Duffy-transformed tensor Gauss rule with n points per direction, exact
/// for polynomials of total degree 2n-2 (n=4 covers degree 6, n=6 degree 10).
TriQuadrature duffy_gauss_rule(int n);

/// Integrates a callable over one element with the given rule.
template <typename F>
double integrate_element(const Triangulation& mesh, int t,
                         const TriQuadrature& rule, F&& f) {
  const auto& elem = mesh.element(t);
  const Eigen::Vector2d& v0 = mesh.node(elem[0]);
  const Eigen::Vector2d& v1 = mesh.node(elem[1]);
  const Eigen::Vector2d& v2 = mesh.node(elem[2]);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Eigen::Vector3d& l = rule.points[q];
    const Eigen::Vector2d x = l[0] * v0 + l[1] * v1 + l[2] * v2;
    sum += rule.weights[q] * f(x);
  }
  return mesh.geometry(t).area * sum;
}

template <typename F>
double integrate(const Triangulation& mesh, const TriQuadrature& rule, F&& f) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t)
    sum += integrate_element(mesh, t, rule, f);
  return sum;
}

/// Two-point Gauss abscissae on [0,1] as fractions along a segment; exact
/// through degree 3 and the rule behind all side averages.
inline std::array<double, 2> gauss2_unit() {
  const double d = 0.5 / std::sqrt(3.0);
  return {0.5 - d, 0.5 + d};
}

}  // namespace femdual
