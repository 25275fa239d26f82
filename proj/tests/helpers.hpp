#pragma once

#include <Eigen/Dense>

#include <random>

#include "femdual/mesh.hpp"
#include "femdual/quadrature.hpp"
#include "femdual/spaces.hpp"

namespace femdual::testing {

/// max over all CR/RT basis pairs of the integration-by-parts residual
/// | (grad phi, psi) + (phi, div psi) - boundary term |, all three integrals
/// exact at this polynomial order.
inline double int_by_parts_max_residual(const Triangulation& mesh) {
  const int ns = mesh.num_sides();
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(ns, ns);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d grad_phi = -2.0 * bg.row(i).transpose();
      const int si = geo.sides[i];
      for (int j = 0; j < 3; ++j) {
        const int sj = geo.sides[j];
        // (grad phi_i, psi_j)_T : psi affine, so |T| psi(x_T)
        lhs(si, sj) +=
            geo.area * grad_phi.dot(rt_basis(mesh, t, j, geo.barycenter));
        // (phi_i, div psi_j)_T : div constant, int phi_i = |T|/3
        const double div =
            geo.side_sign[j] * mesh.side(sj).length / geo.area;
        lhs(si, sj) += geo.area / 3.0 * div;
      }
    }
  }
  // boundary term by two-point Gauss per boundary side (both traces affine)
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ns, ns);
  const auto gauss = gauss2_unit();
  for (int s = 0; s < ns; ++s) {
    const Side& side = mesh.side(s);
    if (!side.boundary()) continue;
    const int t = side.t_minus;
    const auto& geo = mesh.geometry(t);
    const Eigen::Vector2d a = mesh.node(side.nodes[0]);
    const Eigen::Vector2d b = mesh.node(side.nodes[1]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double integral = 0.0;
        for (const double g : gauss) {
          const Eigen::Vector2d x = a + g * (b - a);
          const Eigen::Vector3d l = barycentric_coordinates(mesh, t, x);
          const double phi = 1.0 - 2.0 * l[i];
          integral += 0.5 * side.length *
                      phi * rt_basis(mesh, t, j, x).dot(side.normal);
        }
        rhs(geo.sides[i], geo.sides[j]) += integral;
      }
    }
  }
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

/// Exact side averages by three-point Gauss (degree 5), for the polynomial
/// test pairs whose traces exceed degree 3.
inline CRFunction interpolate_cr_exact(const MeshPtr& mesh,
                                       const ScalarField& v) {
  CRFunction u{mesh, Eigen::VectorXd::Zero(mesh->num_sides())};
  const double g = std::sqrt(3.0 / 5.0);
  const double nodes[3] = {0.5 * (1.0 - g), 0.5, 0.5 * (1.0 + g)};
  const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (int s = 0; s < mesh->num_sides(); ++s) {
    const Side& side = mesh->side(s);
    const Eigen::Vector2d a = mesh->node(side.nodes[0]);
    const Eigen::Vector2d b = mesh->node(side.nodes[1]);
    double avg = 0.0;
    for (int k = 0; k < 3; ++k) avg += weights[k] * v(a + nodes[k] * (b - a));
    u.values[s] = avg;
  }
  for (int s = 0; s < mesh->num_sides(); ++s)
    if (mesh->side(s).boundary() &&
        mesh->side(s).label == SideLabel::dirichlet)
      u.values[s] = 0.0;
  return u;
}

inline RTFunction interpolate_rt_exact(const MeshPtr& mesh,
                                       const VectorField& z) {
  RTFunction f{mesh, Eigen::VectorXd::Zero(mesh->num_sides())};
  const double g = std::sqrt(3.0 / 5.0);
  const double nodes[3] = {0.5 * (1.0 - g), 0.5, 0.5 * (1.0 + g)};
  const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (int s = 0; s < mesh->num_sides(); ++s) {
    const Side& side = mesh->side(s);
    const Eigen::Vector2d a = mesh->node(side.nodes[0]);
    const Eigen::Vector2d b = mesh->node(side.nodes[1]);
    double avg = 0.0;
    for (int k = 0; k < 3; ++k)
      avg += weights[k] * z(a + nodes[k] * (b - a)).dot(side.normal);
    f.values[s] = avg;
  }
  return f;
}

/// Residual of the exchange-of-projections identity for the polynomial pair
/// u = (1-x^2)(1-y^2), z = grad u, with degree-6 element quadrature.
inline double exchange_of_projections_residual(const MeshPtr& mesh) {
  const auto u = [](const Eigen::Vector2d& x) {
    return (1.0 - x.x() * x.x()) * (1.0 - x.y() * x.y());
  };
  const auto grad_u = [](const Eigen::Vector2d& x) -> Eigen::Vector2d {
    return {-2.0 * x.x() * (1.0 - x.y() * x.y()),
            -2.0 * x.y() * (1.0 - x.x() * x.x())};
  };
  const auto div_z = [](const Eigen::Vector2d& x) {
    return -2.0 * (1.0 - x.y() * x.y()) - 2.0 * (1.0 - x.x() * x.x());
  };
  const CRFunction u_cr = interpolate_cr_exact(mesh, u);
  const RTFunction z_rt = interpolate_rt_exact(mesh, grad_u);
  const P0Function u_bar = project_p0(u_cr);
  const P0Field z_bar = project_p0(z_rt);
  const TriQuadrature rule = duffy_gauss_rule(4);
  double total = 0.0;
  for (int t = 0; t < mesh->num_elements(); ++t) {
    const double ub = u_bar.values[t];
    const Eigen::Vector2d zb = z_bar.values.row(t);
    total += integrate_element(*mesh, t, rule, [&](const Eigen::Vector2d& x) {
      return div_z(x) * (u(x) - ub) +
             grad_u(x).dot(grad_u(x) - zb);
    });
  }
  return std::abs(total);
}

inline CRFunction random_cr(const MeshPtr& mesh, unsigned seed,
                            bool respect_dirichlet = true) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CRFunction u{mesh, Eigen::VectorXd(mesh->num_sides())};
  for (int s = 0; s < mesh->num_sides(); ++s) u.values[s] = dist(rng);
  if (respect_dirichlet)
    for (int s = 0; s < mesh->num_sides(); ++s)
      if (mesh->side(s).boundary() &&
          mesh->side(s).label == SideLabel::dirichlet)
        u.values[s] = 0.0;
  return u;
}

}  // namespace femdual::testing
