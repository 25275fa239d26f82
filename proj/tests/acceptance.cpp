// Acceptance suite: every check below pins the artifact's headline
// guarantees at fixed tolerances and prints one PASS/FAIL line. The binary
// exits with the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "femdual/duality.hpp"
#include "femdual/experiments.hpp"
#include "femdual/quadrature.hpp"
#include "femdual/solvers.hpp"
#include "helpers.hpp"

using namespace femdual;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

#define REQUIRE_NEAR(out, expr, bound)                                   \
  do {                                                                   \
    const double value_ = (expr);                                        \
    if (!(value_ <= (bound))) {                                          \
      out.pass = false;                                                  \
      out.detail << " [" #expr " = " << value_ << " > " << (bound)       \
                 << "]";                                                 \
    }                                                                    \
  } while (0)

#define REQUIRE_TRUE(out, cond)                       \
  do {                                                \
    if (!(cond)) {                                    \
      out.pass = false;                               \
      out.detail << " [failed: " #cond "]";           \
    }                                                 \
  } while (0)

DiscreteProblem poisson_problem(const MeshPtr& mesh) {
  const P0Function f_h = project_p0(mesh, poisson_spec().source);
  return DiscreteProblem{mesh, make_p_power(2.0), LowOrderTerm::linear(f_h)};
}

Eigen::VectorXd mixed_rhs_bottom(const MeshPtr& mesh, const P0Function& f_h,
                                 const DofMap& p0_map) {
  Eigen::VectorXd rhs(p0_map.size());
  for (int i = 0; i < p0_map.size(); ++i) {
    const int t = p0_map.reduced_to_full[i];
    rhs[i] = -f_h.values[t] * mesh->geometry(t).area;
  }
  return rhs;
}

/// I(u^l) + tau sum ||d_t u^k||^2 <= I(u^0) + slack from a stored trace.
bool telescoped_bound_holds(const IterationTrace& trace, double tau) {
  double accumulated = 0.0;
  const double slack = 1e-9 * (1.0 + std::abs(trace.energy.front()));
  for (std::size_t k = 0; k < trace.step_norm.size(); ++k) {
    accumulated += tau * trace.step_norm[k] * trace.step_norm[k];
    if (trace.energy[k + 1] + accumulated > trace.energy.front() + slack)
      return false;
  }
  return true;
}

// criterion 1: strong discrete duality for the Poisson benchmark
Outcome criterion_strong_duality() {
  Outcome out;
  for (int level = 3; level <= 6; ++level) {
    const MeshPtr mesh = unit_square_mesh(level);
    const DiscreteProblem pb = poisson_problem(mesh);
    const CRFunction u = solve_cr_poisson(mesh, pb.psi.data);
    const RTFunction z = reconstruct_flux(pb, u);
    const auto gap = duality_gap(pb, u, z);
    REQUIRE_TRUE(out, gap.has_value());
    if (gap) REQUIRE_NEAR(out, std::abs(*gap), 1e-9);
  }
  return out;
}

// criterion 2: Marini equivalence of the classical mixed solve and the
// reconstructed nonconforming solution
Outcome criterion_marini_equivalence() {
  Outcome out;
  for (int level = 2; level <= 5; ++level) {
    const MeshPtr mesh = unit_square_mesh(level);
    const DiscreteProblem pb = poisson_problem(mesh);
    const DofMap rt_map = rt_dof_map(*mesh);
    const DofMap p0_map = p0_dof_map(*mesh);
    const SaddleResult mixed = saddle_solve(
        rt_mass_exact(*mesh, rt_map), div_coupling(*mesh, rt_map, p0_map),
        Eigen::VectorXd::Zero(rt_map.size()),
        mixed_rhs_bottom(mesh, pb.psi.data, p0_map), 1e-12);
    const CRFunction u = solve_cr_poisson(mesh, pb.psi.data);
    const RTFunction z = reconstruct_flux(pb, u);
    const P0Function u_bar = classical_multiplier_correction(u, pb.psi.data);
    REQUIRE_NEAR(out,
                 (rt_map.gather(z.values) - mixed.z).cwiseAbs().maxCoeff(),
                 1e-8);
    REQUIRE_NEAR(
        out,
        (p0_map.gather(u_bar.values) - mixed.u_bar).cwiseAbs().maxCoeff(),
        1e-8);
  }
  return out;
}

// criterion 3: flux/primal reconstruction round trip
Outcome criterion_round_trip() {
  Outcome out;
  const MeshPtr mesh = unit_square_mesh(4);
  {
    const DiscreteProblem pb = poisson_problem(mesh);
    const CRFunction u = solve_cr_poisson(mesh, pb.psi.data);
    const RTFunction z = reconstruct_flux(pb, u);
    const CRFunction back = reconstruct_primal(pb, z, project_p0(u));
    REQUIRE_NEAR(out, (back.values - u.values).cwiseAbs().maxCoeff(), 1e-8);
  }
  {
    const P0Function f_h = project_p0(mesh, p_laplace_spec(1.5).source);
    DiscreteProblem pb{mesh, make_regularized_p_power(1.5, level_h(4)),
                       LowOrderTerm::linear(f_h)};
    SolverConfig cfg;
    cfg.eps_stop = 1e-10;
    cfg.max_iters = 100000;
    const CRFunction u0{mesh, Eigen::VectorXd::Zero(mesh->num_sides())};
    const auto flow = primal_flow(pb.phi, pb.psi, u0, cfg);
    REQUIRE_TRUE(out, flow.trace.converged);
    // the d_t-based stopping test under-reports the optimality residual by
    // a factor of about ten; gate the reconstruction on the measured value
    pb.reconstruction_gate =
        2.0 * euler_lagrange_residual(pb, flow.u) + 1e-14;
    const RTFunction z = reconstruct_flux(pb, flow.u);
    const CRFunction back = reconstruct_primal(pb, z, project_p0(flow.u));
    REQUIRE_NEAR(out, (back.values - flow.u.values).cwiseAbs().maxCoeff(),
                 1e-8);
  }
  return out;
}

// criterion 4: quadratic convergence of both mixed multipliers, with the
// modified variant strictly less accurate
Outcome criterion_poisson_rates() {
  Outcome out;
  const std::vector<int> levels{4, 5, 6};
  const ExperimentReport classical =
      run_poisson(levels, PoissonVariant::classical_mixed);
  const ExperimentReport modified =
      run_poisson(levels, PoissonVariant::modified_mixed);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    REQUIRE_TRUE(out,
                 modified.rows[i].error > classical.rows[i].error);
    if (i == 0) continue;
    for (const ExperimentReport* rep : {&classical, &modified}) {
      REQUIRE_TRUE(out, rep->rows[i].rate >= 1.8);
      REQUIRE_TRUE(out, rep->rows[i].rate <= 2.1);
    }
  }
  out.detail << " [classical rates";
  for (std::size_t i = 1; i < levels.size(); ++i)
    out.detail << ' ' << classical.rows[i].rate;
  out.detail << "; modified";
  for (std::size_t i = 1; i < levels.size(); ++i)
    out.detail << ' ' << modified.rows[i].rate;
  out.detail << ']';
  return out;
}

ExperimentReport g_tv_cr;       // shared with criterion 7
ExperimentReport g_tv_p1;
ExperimentReport g_inf_rt;

// criterion 5: quasi-optimal TV rate for the nonconforming method and
// strictly larger conforming errors
Outcome criterion_tv_rates() {
  Outcome out;
  const std::vector<int> levels{4, 5, 6, 7};
  g_tv_cr = run_tv(levels, 10.0, 0.5, TvMethod::cr);
  g_tv_p1 = run_tv(levels, 10.0, 0.5, TvMethod::p1);
  const double plateau = 1.0 - kDim / (10.0 * 0.5);
  REQUIRE_NEAR(out, std::abs(plateau - 0.6), 1e-15);
  const double rate =
      std::log2(g_tv_cr.rows.front().error / g_tv_cr.rows.back().error) /
      (levels.back() - levels.front());
  REQUIRE_TRUE(out, rate >= 0.8);
  REQUIRE_TRUE(out, rate <= 1.3);
  for (std::size_t i = 0; i < levels.size(); ++i)
    REQUIRE_TRUE(out, g_tv_p1.rows[i].error > g_tv_cr.rows[i].error);
  out.detail << " [squared-error rate over levels 4..7: " << rate << ']';
  return out;
}

// criterion 6: infinity Laplacian energy errors against -4/3
Outcome criterion_inf_laplace_rates() {
  Outcome out;
  const std::vector<int> levels{4, 5, 6};
  g_inf_rt = run_inf_laplace(levels, InfLaplaceMethod::rt_dual);
  const ExperimentReport p1 =
      run_inf_laplace(levels, InfLaplaceMethod::p1_admm);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    REQUIRE_TRUE(out, g_inf_rt.rows[i].rate >= 1.3);
    REQUIRE_TRUE(out, g_inf_rt.rows[i].rate <= 2.0);
    REQUIRE_TRUE(out, p1.rows[i].rate >= 1.6);
    REQUIRE_TRUE(out, p1.rows[i].rate <= 2.2);
  }
  out.detail << " [rt_dual rates";
  for (std::size_t i = 1; i < levels.size(); ++i)
    out.detail << ' ' << g_inf_rt.rows[i].rate;
  out.detail << "; p1_admm";
  for (std::size_t i = 1; i < levels.size(); ++i)
    out.detail << ' ' << p1.rows[i].rate;
  out.detail << ']';
  return out;
}

// criterion 7: the monotone descent bound of the semi-implicit flows,
// asserted from the traces of criteria 5 and 6
Outcome criterion_monotone_descent() {
  Outcome out;
  REQUIRE_TRUE(out, !g_tv_cr.traces.empty());
  for (const IterationTrace& trace : g_tv_cr.traces)
    REQUIRE_TRUE(out, telescoped_bound_holds(trace, 1.0));
  for (const IterationTrace& trace : g_tv_p1.traces)
    REQUIRE_TRUE(out, telescoped_bound_holds(trace, 1.0));
  for (IterationTrace trace : g_inf_rt.traces) {
    for (double& e : trace.energy) e = -e;  // the bound controls -D
    REQUIRE_TRUE(out, telescoped_bound_holds(trace, 1.0));
  }
  return out;
}

// criterion 8: structural identities of the discrete spaces
Outcome criterion_structural_identities() {
  Outcome out;
  for (int level = 1; level <= 4; ++level) {
    const MeshPtr mesh = unit_square_mesh(level);
    REQUIRE_NEAR(out, femdual::testing::int_by_parts_max_residual(*mesh),
                 1e-12);
    REQUIRE_NEAR(out,
                 femdual::testing::exchange_of_projections_residual(mesh),
                 1e-10);
    // commuting diagrams on polynomial inputs with exact side quadrature
    const MeshPtr free_mesh = set_boundary_labels(
        *mesh, [](const Eigen::Vector2d&) { return SideLabel::neumann; });
    const CRFunction u = interpolate_cr(
        free_mesh, [](const Eigen::Vector2d& x) { return x.x() * x.y(); });
    const P0Field lhs = grad_h(u);
    const P0Field rhs =
        project_p0(free_mesh, [](const Eigen::Vector2d& x) {
          return Eigen::Vector2d{x.y(), x.x()};
        });
    REQUIRE_NEAR(out, (lhs.values - rhs.values).cwiseAbs().maxCoeff(),
                 1e-12);
    // the RT interpolant is unconstrained on the default all-Dirichlet mesh
    const RTFunction z = interpolate_rt(mesh, [](const Eigen::Vector2d& x) {
      return Eigen::Vector2d{x.x() * x.x(), -x.y()};
    });
    const P0Function dl = divergence(z);
    const P0Function dr = project_p0(
        mesh, [](const Eigen::Vector2d& x) { return 2.0 * x.x() - 1.0; });
    REQUIRE_NEAR(out, (dl.values - dr.values).cwiseAbs().maxCoeff(), 1e-12);
  }
  return out;
}

// criterion 9: Fenchel-Young and the radial monotonicity inequality on
// 10^4 random samples per instance
Outcome criterion_property_suites() {
  Outcome out;
  std::mt19937 rng(2024u);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto sample = [&](double scale) {
    return Eigen::Vector2d{scale * dist(rng) / 3.0, scale * dist(rng) / 3.0};
  };

  struct Instance {
    ConvexIntegrand ci;
    bool ball_primal;  // sample s in the unit ball
    bool ball_dual;    // sample t in the unit ball
  };
  std::vector<Instance> instances;
  instances.push_back({make_p_power(1.5), false, false});
  instances.push_back({make_p_power(2.0), false, false});
  instances.push_back({make_p_power(3.0), false, false});
  instances.push_back({make_regularized_p_power(1.5, 0.1), false, false});
  instances.push_back({make_regularized_modulus(0.25), false, true});
  instances.push_back({make_truncated_modulus(0.5), false, true});
  instances.push_back({make_modulus(), false, true});
  instances.push_back({make_unit_ball_indicator(), true, false});
  for (const Instance& inst : instances) {
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      Eigen::Vector2d s = sample(3.0);
      Eigen::Vector2d t = sample(3.0);
      if (inst.ball_primal && s.norm() > 1.0) s /= s.norm() * (1.0 + 1e-12);
      if (inst.ball_dual && t.norm() > 1.0) t /= t.norm() * (1.0 + 1e-12);
      const double gap = fenchel_gap(inst.ci, s, t);
      if (gap < worst) worst = gap;
    }
    REQUIRE_TRUE(out, worst >= -1e-12);
  }

  std::vector<ConvexIntegrand> eligible;
  eligible.push_back(make_regularized_modulus(0.05));
  eligible.push_back(make_regularized_modulus(0.5));
  eligible.push_back(make_regularized_p_power(1.2, 0.1));
  eligible.push_back(make_regularized_p_power(1.5, 0.05));
  eligible.push_back(make_regularized_p_power(2.0, 0.25));
  eligible.push_back(make_truncated_modulus(0.2));
  for (const ConvexIntegrand& ci : eligible) {
    REQUIRE_TRUE(out, ci.flow_eligible);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const Eigen::Vector2d a = sample(3.0);
      const Eigen::Vector2d b = sample(3.0);
      const double w = ci.radial_ratio(a.norm());
      const double lhs = w * b.dot(b - a);
      const double rhs = ci.phi(Eigen::Vector2d{b.norm(), 0.0}) -
                         ci.phi(Eigen::Vector2d{a.norm(), 0.0}) +
                         0.5 * w * (b - a).squaredNorm();
      if (lhs - rhs < worst) worst = lhs - rhs;
    }
    REQUIRE_TRUE(out, worst >= -1e-12);
  }
  return out;
}

// criterion 10: obstacle KKT system and admissibility of the reconstructed
// flux with multiplier
Outcome criterion_obstacle() {
  Outcome out;
  for (int level = 2; level <= 5; ++level) {
    const MeshPtr mesh = unit_square_mesh(level);
    const P0Function f_h =
        sample_barycenters(mesh, obstacle_spec().source);
    SolverConfig cfg;
    cfg.eps_stop = 1e-10;
    cfg.max_iters = 200;
    const ObstacleResult sol = obstacle_active_set(mesh, f_h, cfg);
    REQUIRE_TRUE(out, sol.trace.converged);
    const P0Function bar = project_p0(sol.u);
    double complementarity = 0.0;
    for (int t = 0; t < mesh->num_elements(); ++t)
      complementarity = std::max(
          complementarity, std::abs(sol.mu.values[t] * bar.values[t]));
    REQUIRE_NEAR(out, complementarity, 1e-10);
    REQUIRE_NEAR(out, sol.mu.values.maxCoeff(), 1e-12);
    REQUIRE_NEAR(out, -bar.values.minCoeff(), 1e-12);

    // reconstructed flux: single valued normal traces of the formula
    DiscreteProblem pb{mesh, make_p_power(2.0),
                       LowOrderTerm::obstacle_linear(f_h)};
    const RTFunction z = reconstruct_flux(pb, sol.u, &sol.mu);
    const P0Field grad = grad_h(sol.u);
    double max_jump = 0.0;
    for (int s = 0; s < mesh->num_sides(); ++s) {
      const Side& side = mesh->side(s);
      if (side.boundary()) continue;
      double trace[2];
      const int elems[2] = {side.t_minus, side.t_plus};
      for (int e = 0; e < 2; ++e) {
        const int t = elems[e];
        const double c = f_h.values[t] - sol.mu.values[t];
        const Eigen::Vector2d value =
            grad.values.row(t).transpose() -
            c / kDim * (side.midpoint - mesh->geometry(t).barycenter);
        trace[e] = value.dot(side.normal);
      }
      max_jump = std::max(max_jump, std::abs(trace[0] - trace[1]));
    }
    REQUIRE_NEAR(out, max_jump, 1e-9);
  }
  return out;
}

// criterion 11: stability of the enriching operator across levels
Outcome criterion_enriching_operator() {
  Outcome out;
  const TriQuadrature& rule = edge_midpoint_rule();
  double previous_sup = 0.0;
  for (int level = 2; level <= 5; ++level) {
    const MeshPtr mesh = unit_square_mesh(level);
    double sup = 0.0;
    for (unsigned seed = 0; seed < 100; ++seed) {
      const CRFunction v = femdual::testing::random_cr(mesh, seed);
      const double denom = l2_norm(grad_h(v));
      if (denom == 0.0) continue;
      const P2Function e = enrich_cr(v);
      double num_sq = 0.0;
      for (int t = 0; t < mesh->num_elements(); ++t)
        num_sq += integrate_element(
            *mesh, t, rule, [&](const Eigen::Vector2d& x) {
              return gradient_p2(e, t, x).squaredNorm();
            });
      sup = std::max(sup, std::sqrt(num_sq) / denom);
    }
    REQUIRE_TRUE(out, std::isfinite(sup));
    if (level > 2) {
      const double ratio = sup / previous_sup;
      REQUIRE_TRUE(out, ratio >= 0.5);
      REQUIRE_TRUE(out, ratio <= 2.0);
      out.detail << " [level " << level << " sup " << sup << ']';
    }
    previous_sup = sup;
  }
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const std::vector<Entry> entries = {
      {1, "strong discrete duality (Poisson, levels 3-6, gap < 1e-9)",
       criterion_strong_duality, 10.0},
      {2, "Marini equivalence (mixed solve vs reconstruction, levels 2-5)",
       criterion_marini_equivalence, 10.0},
      {3, "reconstruction round trip (Poisson and p=1.5, level 4)",
       criterion_round_trip, 60.0},
      {4, "Poisson mixed multiplier rates in [1.8,2.1], modified error larger",
       criterion_poisson_rates, 30.0},
      {5, "TV squared-error rate in [0.8,1.3], P1 errors larger (levels 4-7)",
       criterion_tv_rates, 300.0},
      {6, "infinity Laplacian energy rates (rt_dual [1.3,2.0], p1_admm "
          "[1.6,2.2])",
       criterion_inf_laplace_rates, 180.0},
      {7, "monotone descent bound on all flow traces of criteria 5 and 6",
       criterion_monotone_descent, 10.0},
      {8, "structural identities (integration by parts, commuting diagrams, "
          "exchange of projections)",
       criterion_structural_identities, 30.0},
      {9, "Fenchel-Young and radial monotonicity property suites",
       criterion_property_suites, 10.0},
      {10, "obstacle KKT conditions and admissible reconstructed flux "
           "(levels 2-5)",
       criterion_obstacle, 30.0},
      {11, "enriching operator gradient stability (levels 2-5)",
       criterion_enriching_operator, 60.0},
  };

  int failed = 0;
  for (const Entry& entry : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << " [exception: " << e.what() << ']';
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    if (seconds > entry.budget_seconds) {
      outcome.pass = false;
      outcome.detail << " [runtime " << seconds << "s exceeds "
                     << entry.budget_seconds << "s]";
    }
    if (!outcome.pass) ++failed;
    std::printf("[%s] criterion %2d: %s%s (%.2fs)\n",
                outcome.pass ? "PASS" : "FAIL", entry.id, entry.label,
                outcome.detail.str().c_str(), seconds);
    std::fflush(stdout);
  }
  if (failed == 0)
    std::printf("acceptance: all %zu criteria passed\n", entries.size());
  else
    std::printf("acceptance: %d of %zu criteria FAILED\n", failed,
                entries.size());
  return failed;
}
