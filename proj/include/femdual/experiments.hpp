#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "femdual/duality.hpp"
#include "femdual/solvers.hpp"

namespace femdual {

/// Canonical mesh size h_l = 2^-l of the refinement hierarchy; the policies
/// eps = h and eps_stop = h/20 are stated in these units.
double level_h(int level);

struct LevelRow {
  int level = 0;
  int n_vertices = 0;
  double h = 0.0;
  double error = 0.0;  // metric is experiment-specific (see each runner)
  double rate = std::numeric_limits<double>::quiet_NaN();
  double energy_primal = std::numeric_limits<double>::quiet_NaN();
  double energy_dual = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

struct ExperimentReport {
  std::string name;
  std::vector<LevelRow> rows;
  std::vector<IterationTrace> traces;  // per level; empty for direct solves
  std::vector<P0Function> fields;      // piecewise constant solution views
  bool all_converged = true;
};

/// rate_l = log2(e_{l-1}/e_l), scaled by the level increment when levels are
/// not consecutive; the first level has no rate.
void compute_rates(ExperimentReport& report);

/// CSV `level,N,h,error,rate,energy_primal,energy_dual,gap,iters` with 16
/// significant digits; the first rate cell is empty. Deterministic.
void write_report(std::ostream& out, const ExperimentReport& report);
void emit_report(const ExperimentReport& report, const std::string& path);

/// Piecewise constant field dump `x_T,y_T,value`.
void write_p0_csv(std::ostream& out, const P0Function& f);

/// Named problem data: exact solution/flux/energy where the problem has
/// them in closed form.
struct ProblemSpec {
  std::string name;
  double alpha = 0.0;
  double radius = 0.0;
  double p = 0.0;
  ScalarField exact_solution;  // may be empty
  VectorField exact_flux;      // may be empty
  ScalarField source;          // f
  ScalarField data_g;          // g
  double exact_energy = std::numeric_limits<double>::quiet_NaN();
};

ProblemSpec poisson_spec();
ProblemSpec tv_spec(double alpha, double radius);
ProblemSpec inf_laplace_spec();
ProblemSpec obstacle_spec();
ProblemSpec p_laplace_spec(double p);

/// Shared run options; the defaults realize eps = h, eps_stop = h/20,
/// tau = 1 with the L2 inner products.
struct RunOptions {
  bool eps_follows_h = true;
  double eps_fixed = 0.0;
  bool eps_stop_follows_h = true;  // eps_stop = h/20
  double eps_stop_fixed = 0.0;
  double tau = 1.0;
  int max_iters = 50000;
  double linear_tol = 1e-10;

  double eps(int level) const;
  double eps_stop(int level) const;
};

enum class PoissonVariant { classical_mixed, modified_mixed, cr_primal };
enum class TvMethod { cr, p1 };
enum class InfLaplaceMethod { rt_dual, p1_admm };

/// Poisson benchmark: error column is ||u_bar - u(x_T)||_L2.
ExperimentReport run_poisson(const std::vector<int>& levels,
                             PoissonVariant variant,
                             const RunOptions& opt = {});

/// Total variation benchmark: error column is the squared midpoint error
/// ||Pi_0 u_h - u(x_T)||^2.
ExperimentReport run_tv(const std::vector<int>& levels, double alpha,
                        double radius, TvMethod method,
                        const RunOptions& opt = {});

/// Infinity Laplacian benchmark: error column is |D(z) - D_{eps,h}(z_h)| for
/// the dual method and |I(u) - I(u_h^c)| for the conforming one; the exact
/// value of both energies is -4/3.
ExperimentReport run_inf_laplace(const std::vector<int>& levels,
                                 InfLaplaceMethod method,
                                 const RunOptions& opt = {});

/// Obstacle benchmark (property-based): error column is the final KKT
/// residual.
ExperimentReport run_obstacle(const std::vector<int>& levels,
                              const RunOptions& opt = {});

/// p-Dirichlet benchmark: error column is ||F(grad_h I_cr u) - F(grad_h u_h)||
/// with F(a) = |a|^(p/2-1) a; p in (1,2] runs the primal flow, p >= 2 the
/// dual flow on the conjugate exponent.
ExperimentReport run_p_laplace(const std::vector<int>& levels, double p,
                               const RunOptions& opt = {});

}  // namespace femdual
