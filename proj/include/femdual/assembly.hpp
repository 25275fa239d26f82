#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "femdual/integrands.hpp"
#include "femdual/mesh.hpp"
#include "femdual/spaces.hpp"

namespace femdual {

/// Assembled bilinear form in compressed sparse form. Assembly is a fixed
/// element-order triplet scatter, so identical inputs give identical
/// matrices.
struct SparseOperator {
  Eigen::SparseMatrix<double> matrix;
  bool symmetric = false;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x; }
};

/// (w grad_h u, grad_h v) over unconstrained CR dofs; exact since the
/// integrand is elementwise constant. Weights must be positive.
SparseOperator cr_weighted_stiffness(const Triangulation& mesh,
                                     const P0Function& weights,
                                     const DofMap& cr_map);

/// Load vector (f_h, v) over unconstrained CR dofs; entry for side S is
/// sum_{T contains S} f_h|_T |T|/3.
Eigen::VectorXd cr_load(const Triangulation& mesh, const P0Function& f_h,
                        const DofMap& cr_map);

/// Diagonal of the exact CR L2 mass (the CR basis is orthogonal at this
/// order): entry sum_{T contains S} |T|/3.
Eigen::VectorXd cr_mass_diagonal(const Triangulation& mesh,
                                 const DofMap& cr_map);

/// (Pi_0 z, Pi_0 y) over unconstrained RT dofs: the lumped mass of the
/// modified dual method. Positive semidefinite.
SparseOperator rt_mass_modified(const Triangulation& mesh,
                                const DofMap& rt_map);

/// Weighted variant (w Pi_0 z, Pi_0 y) with elementwise constant weights.
SparseOperator rt_mass_modified_weighted(const Triangulation& mesh,
                                         const P0Function& weights,
                                         const DofMap& rt_map);

/// (z, y) with degree-2 quadrature, exact for products of affine fields;
/// symmetric positive definite on the constrained space.
SparseOperator rt_mass_exact(const Triangulation& mesh, const DofMap& rt_map);

/// (div y, v_bar) mapping RT dofs to P0 dofs; entries are signed side
/// lengths, exact.
SparseOperator div_coupling(const Triangulation& mesh, const DofMap& rt_map,
                            const DofMap& p0_map);

/// (Pi_0 u, Pi_0 v) over unconstrained CR dofs (rank-one per element).
SparseOperator cr_projection_pairing(const Triangulation& mesh,
                                     const DofMap& cr_map);

/// Barycenter-value map u -> (u(x_T))_T over unconstrained CR dofs.
SparseOperator cr_barycenter_map(const Triangulation& mesh,
                                 const DofMap& cr_map);

// -- conforming P1 variants ---------------------------------------------------

SparseOperator p1_weighted_stiffness(const Triangulation& mesh,
                                     const P0Function& weights,
                                     const DofMap& p1_map);
SparseOperator p1_mass(const Triangulation& mesh, const DofMap& p1_map);
SparseOperator p1_projection_pairing(const Triangulation& mesh,
                                     const DofMap& p1_map);
Eigen::VectorXd p1_load(const Triangulation& mesh, const P0Function& f_h,
                        const DofMap& p1_map);
/// (q, grad v) for an elementwise constant field q, over P1 dofs.
Eigen::VectorXd p1_field_gradient_pairing(const Triangulation& mesh,
                                          const P0Field& q,
                                          const DofMap& p1_map);
/// Same pairing against CR gradients.
Eigen::VectorXd cr_field_gradient_pairing(const Triangulation& mesh,
                                          const P0Field& q,
                                          const DofMap& cr_map);

}  // namespace femdual
