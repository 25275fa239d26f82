#pragma once

#include <Eigen/Core>

#include <iosfwd>

#include "femdual/assembly.hpp"
#include "femdual/integrands.hpp"
#include "femdual/mesh.hpp"
#include "femdual/spaces.hpp"

namespace femdual {

struct SolverConfig {
  double tau = 1.0;          // step size of the semi-implicit iterations
  double eps_stop = 1e-8;    // stopping tolerance on ||d_t u||
  int max_iters = 20000;
  double linear_tol = 1e-10;  // relative residual of inner linear solves
};

/// Per-step record of an iterative run. For primal runs `energy` holds
/// I_h(u^k); for dual runs it holds D_h(z^k). The telescoped monotonicity
/// bound is checkable from (energy, step_norm, tau).
struct IterationTrace {
  std::vector<double> energy;
  std::vector<double> step_norm;
  int iterations = 0;
  bool converged = false;
};

/// CSV dump `k,energy,step_norm`.
void write_trace(std::ostream& out, const IterationTrace& trace);

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems; stops at
/// ||Ax-b|| <= tol ||b||. Throws on iteration cap with the reached residual.
CgResult cg_solve(const SparseOperator& A, const Eigen::VectorXd& b,
                  double tol, int max_iters = -1,
                  const Eigen::VectorXd* x0 = nullptr);

struct SaddleResult {
  Eigen::VectorXd z;
  Eigen::VectorXd u_bar;
  int outer_iterations = 0;
};

/// Solves [[M, B^T],[B, 0]] (z,u) = (rhs_top, rhs_bottom) by outer conjugate
/// gradients on the Schur complement B M^-1 B^T with direct inner solves.
/// `augment` adds gamma B^T B to M first (an equivalent system), which makes
/// the inner operator definite when M is only semidefinite, as for the
/// lumped Raviart-Thomas mass. Throws on a singular Schur complement.
SaddleResult saddle_solve(const SparseOperator& M, const SparseOperator& B,
                          const Eigen::VectorXd& rhs_top,
                          const Eigen::VectorXd& rhs_bottom, double tol,
                          double augment = 0.0);

template <typename Function>
struct PrimalFlowResult {
  Function u;
  IterationTrace trace;
};

/// Semi-implicit primal gradient flow: each step solves the linear SPD
/// system (d_t u^k, v) + (ratio(|grad u^{k-1}|) grad u^k, grad v)
/// + (Dpsi, v) = 0 with the L2 pairing and step size tau; quadratic low
/// order terms are treated implicitly, linear ones exactly. Requires a
/// flow-eligible integrand. Non-convergence is a flagged result.
PrimalFlowResult<CRFunction> primal_flow(const ConvexIntegrand& ci,
                                         const LowOrderTerm& lo,
                                         const CRFunction& u0,
                                         const SolverConfig& cfg);
PrimalFlowResult<P1Function> primal_flow(const ConvexIntegrand& ci,
                                         const LowOrderTerm& lo,
                                         const P1Function& u0,
                                         const SolverConfig& cfg);

struct DualFlowResult {
  RTFunction z;
  P0Function u_bar;  // multiplier of the final step
  IterationTrace trace;
};

/// Semi-implicit dual gradient flow under the hard constraint -div z = f_h:
/// each step solves a saddle-point system whose test fields satisfy
/// div y = 0; the constraint multiplier of the final step is returned as
/// u_bar. `phi_star` is the integrand bundle of the conjugate (its phi and
/// radial profile describe phi*). The start must be feasible.
DualFlowResult dual_flow(const ConvexIntegrand& phi_star,
                         const P0Function& f_h, const RTFunction& z0,
                         const SolverConfig& cfg);

/// Dual flow for a quadratic low order term psi(s) = (alpha/2)(s-g)^2; the
/// divergence enters through Dpsi*(div z) = div z / alpha + g and every step
/// is an unconstrained SPD solve. u_bar is g + div z / alpha.
DualFlowResult dual_flow_quadratic(const ConvexIntegrand& phi_star,
                                   const P0Function& g_h, double alpha,
                                   const RTFunction& z0,
                                   const SolverConfig& cfg);

/// Minimal-L2-norm feasible field with -div z = f_h (one saddle solve with
/// the exact mass); the canonical dual flow start.
RTFunction feasible_start(const MeshPtr& mesh, const P0Function& f_h,
                          double tol);

struct AdmmResult {
  P1Function u;
  P0Field q;
  IterationTrace trace;
};

/// ADMM on the conforming P1 space for min phi(grad u) + psi(u): alternating
/// u-solve (SPD, factored once), closed-form q-prox, multiplier ascent;
/// stops on the primal residual ||grad u - q||. `ci` must carry a prox map.
AdmmResult admm(const ConvexIntegrand& ci, const LowOrderTerm& lo,
                const MeshPtr& mesh, const SolverConfig& cfg,
                double tau_admm);

struct ObstacleResult {
  CRFunction u;
  P0Function mu;
  IterationTrace trace;
};

/// Primal-dual active set iteration for the quadratic obstacle problem with
/// elementwise barycenter constraints Pi_0 u >= 0; returns the solution and
/// the multiplier mu <= 0 supported on the contact set.
ObstacleResult obstacle_active_set(const MeshPtr& mesh, const P0Function& f_h,
                                   const SolverConfig& cfg);

/// Direct CR / P1 solves of the linear Poisson-type problem
/// (grad u, grad v) = (f_h, v); convenience built on the assembly kernels.
CRFunction solve_cr_poisson(const MeshPtr& mesh, const P0Function& f_h);
P1Function solve_p1_poisson(const MeshPtr& mesh, const P0Function& f_h);

}  // namespace femdual
