#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "femdual/assembly.hpp"
#include "femdual/integrands.hpp"
#include "femdual/mesh.hpp"
#include "femdual/spaces.hpp"

namespace femdual {

/// A discrete convex minimization problem: integrand bundle phi, low-order
/// term psi_h with elementwise constant data, boundary partition from the
/// mesh labels.
struct DiscreteProblem {
  MeshPtr mesh;
  ConvexIntegrand phi;
  LowOrderTerm psi;
  /// Tolerance used by indicator-type conjugates (divergence constraints,
  /// sign conditions).
  double feasibility_tol = 1e-8;
  /// Euler-Lagrange residual gate for reconstruction; the theorem behind the
  /// formula assumes exact discrete optimality.
  double reconstruction_gate = 1e-8;
};

/// I_h(u) = int phi(grad_h u) + psi_h(x, Pi_0 u); exact for the elementwise
/// constant arguments involved. Returns +inf if grad_h u leaves dom phi.
double primal_energy(const DiscreteProblem& pb, const CRFunction& u);
double primal_energy(const DiscreteProblem& pb, const P1Function& u);

struct DualEnergy {
  double value;  // -inf when infeasible
  std::vector<int> infeasible_elements;
  bool feasible() const { return infeasible_elements.empty(); }
};

/// D_h(z) = -int phi*(Pi_0 z) - psi_h*(x, div z); elements violating an
/// indicator conjugate are reported.
DualEnergy dual_energy(const DiscreteProblem& pb, const RTFunction& z);

/// L2-Riesz norm of the Euler-Lagrange residual of u (the scale on which
/// flow stopping tolerances live).
double euler_lagrange_residual(const DiscreteProblem& pb, const CRFunction& u,
                               const P0Function* multiplier = nullptr);

/// Generalized flux reconstruction z|_T = Dphi(grad_h u|_T)
/// + d^-1 Dpsi_h(x, u(x_T)) (x - x_T). For obstacle problems the multiplier
/// supplies Dpsi_h = mu - f. Throws when the Euler-Lagrange residual exceeds
/// the gate or the side traces of the formula disagree beyond it.
RTFunction reconstruct_flux(const DiscreteProblem& pb, const CRFunction& u,
                            const P0Function* multiplier = nullptr);

/// Inverse reconstruction u(x) = u_bar|_T + Dphi*(Pi_0 z|_T) . (x - x_T).
/// Midpoint continuity across interior sides is asserted (tolerance 1e-8
/// scaled); it is the CR property of the result, not an assumption.
CRFunction reconstruct_primal(const DiscreteProblem& pb, const RTFunction& z,
                              const P0Function& u_bar,
                              double continuity_tol = 1e-8);

/// Multiplier of the classical (unmodified) mixed method:
/// u_bar|_T = u(x_T) + f_h|_T/(d^2 |T|) * int_T |x - x_T|^2.
P0Function classical_multiplier_correction(const CRFunction& u,
                                           const P0Function& f_h);

/// I_h(u) - D_h(z) >= 0; empty when z is infeasible for D_h.
std::optional<double> duality_gap(const DiscreteProblem& pb,
                                  const CRFunction& u, const RTFunction& z);

struct EstimatorResult {
  double eta_total;
  Eigen::VectorXd per_element;  // squared contributions, nonnegative
};

/// CSV dump `element,x_T,y_T,eta_sq_contribution`.
void write_estimator_csv(std::ostream& out, const Triangulation& mesh,
                         const EstimatorResult& result);

/// eta^2(u_c, z) = 2 int [phi(grad u_c) - z.grad u_c + phi*(z)] with
/// degree-2 quadrature; requires -div z = f_h.
EstimatorResult aposteriori_eta(const DiscreteProblem& pb,
                                const P1Function& u_c, const RTFunction& z);

/// eta_tilde(u_c, u_cr) = ||grad u_c - grad_h u_cr|| + ||(f_h/d)(.-x_T)||,
/// the second term from the closed-form second moment of each triangle.
double aposteriori_eta_tilde(const P1Function& u_c, const CRFunction& u_cr,
                             const P0Function& f_h);

/// int_T |x - x_T|^2 (polar second moment about the barycenter).
double element_second_moment(const Triangulation& mesh, int t);

}  // namespace femdual
