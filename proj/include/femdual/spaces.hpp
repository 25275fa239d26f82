#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>

#include "femdual/mesh.hpp"

namespace femdual {

using ScalarField = std::function<double(const Eigen::Vector2d&)>;
using VectorField = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

/// Elementwise constant scalar function, one value per element.
struct P0Function {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

/// Elementwise constant vector field, one row per element.
struct P0Field {
  MeshPtr mesh;
  Eigen::Matrix<double, Eigen::Dynamic, 2> values;
};

/// Crouzeix-Raviart function: piecewise affine, continuous at side midpoints.
/// One coefficient per side (the value at the side midpoint); coefficients on
/// Dirichlet sides are held at zero.
struct CRFunction {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

/// Lowest-order Raviart-Thomas field, a_T + b_T (x - x_T) per element. One
/// coefficient per side (the constant normal flux with respect to n_S);
/// coefficients on Neumann sides are held at zero.
struct RTFunction {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

/// Conforming piecewise affine function; Dirichlet vertices held at zero.
struct P1Function {
  MeshPtr mesh;
  Eigen::VectorXd values;  // per vertex
};

/// Conforming piecewise quadratic function; Dirichlet nodes held at zero.
struct P2Function {
  MeshPtr mesh;
  Eigen::VectorXd vertex_values;
  Eigen::VectorXd side_values;
};

/// Mapping between the full per-entity coefficient vector and the reduced
/// vector of unconstrained dofs.
struct DofMap {
  std::vector<int> full_to_reduced;  // -1 for constrained entities
  std::vector<int> reduced_to_full;

  int size() const { return static_cast<int>(reduced_to_full.size()); }
  bool constrained(int full) const { return full_to_reduced[full] < 0; }

  Eigen::VectorXd gather(const Eigen::VectorXd& full) const;
  Eigen::VectorXd scatter(const Eigen::VectorXd& reduced) const;
};

DofMap cr_dof_map(const Triangulation& mesh);  // excludes Dirichlet sides
DofMap rt_dof_map(const Triangulation& mesh);  // excludes Neumann sides
DofMap p1_dof_map(const Triangulation& mesh);  // excludes Dirichlet vertices
/// All elements; if no Dirichlet boundary exists the last element is pinned
/// so the constant mode is eliminated.
DofMap p0_dof_map(const Triangulation& mesh);

/// True for vertices lying on a Dirichlet boundary side.
std::vector<bool> dirichlet_vertices(const Triangulation& mesh);

// -- evaluation ------------------------------------------------------------

double evaluate_cr(const CRFunction& u, int t, const Eigen::Vector2d& x);
double evaluate_p1(const P1Function& u, int t, const Eigen::Vector2d& x);
double evaluate_p2(const P2Function& u, int t, const Eigen::Vector2d& x);
Eigen::Vector2d gradient_p2(const P2Function& u, int t,
                            const Eigen::Vector2d& x);

/// RT basis field of local side i of element t at x.
Eigen::Vector2d rt_basis(const Triangulation& mesh, int t, int local_side,
                         const Eigen::Vector2d& x);

/// Value of an RT field inside element t; throws std::domain_error when the
/// point lies outside the element.
Eigen::Vector2d evaluate_rt(const RTFunction& z, int t,
                            const Eigen::Vector2d& x);

// -- differential operators (exact, no quadrature) --------------------------

P0Field grad_h(const CRFunction& u);
P0Field grad_p1(const P1Function& u);
P0Function divergence(const RTFunction& z);

// -- projections and interpolants -------------------------------------------

/// L2 projection onto elementwise constants. For the finite element types it
/// is the exact barycenter evaluation; for a general callable a degree-2
/// rule is used, which is approximate for non-polynomial data.
P0Function project_p0(const MeshPtr& mesh, const ScalarField& f);
P0Field project_p0(const MeshPtr& mesh, const VectorField& f);
P0Function project_p0(const CRFunction& u);
P0Function project_p0(const P1Function& u);
P0Field project_p0(const RTFunction& z);

/// Barycenter sampling g_T = g(x_T) (not the L2 projection).
P0Function sample_barycenters(const MeshPtr& mesh, const ScalarField& g);

/// Side averages by two-point Gauss (exact through degree 3), then Dirichlet
/// coefficients are set to zero.
CRFunction interpolate_cr(const MeshPtr& mesh, const ScalarField& v);

/// Side-averaged normal fluxes by two-point Gauss, then Neumann coefficients
/// are set to zero.
RTFunction interpolate_rt(const MeshPtr& mesh, const VectorField& z);

/// Nodal interpolant onto conforming P1 (Dirichlet vertices zeroed).
P1Function interpolate_p1(const MeshPtr& mesh, const ScalarField& v);

/// Enriching operator into conforming P2: side nodes copy the CR values,
/// vertex values average the adjacent element traces, Dirichlet vertices are
/// zeroed; constants are reproduced when no constraint is active.
P2Function enrich_cr(const CRFunction& v);

/// CSV dump `dof_index,value` of any coefficient vector.
void write_dof_csv(std::ostream& out, const Eigen::VectorXd& values);

// -- norms -------------------------------------------------------------------

double l2_norm(const P0Function& f);
double l2_norm(const P0Field& f);
/// Exact L2 norms of the piecewise polynomial functions themselves.
double l2_norm(const CRFunction& u);
double l2_norm(const P1Function& u);

}  // namespace femdual
