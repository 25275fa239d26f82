#include "femdual/solvers.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace femdual {

namespace {

void validate(const SolverConfig& cfg) {
  if (!(cfg.tau > 0.0) || !(cfg.eps_stop > 0.0) || cfg.max_iters < 1 ||
      !(cfg.linear_tol > 0.0))
    throw std::invalid_argument("SolverConfig: requires tau > 0, "
                                "eps_stop > 0, max_iters >= 1");
}

}  // namespace

void write_trace(std::ostream& out, const IterationTrace& trace) {
  char buf[160];
  out << "k,energy,step_norm\n";
  for (std::size_t k = 0; k < trace.energy.size(); ++k) {
    const double step = k == 0 ? 0.0 : trace.step_norm[k - 1];
    std::snprintf(buf, sizeof(buf), "%zu,%.16g,%.16g", k, trace.energy[k],
                  step);
    out << buf << '\n';
  }
}

CgResult cg_solve(const SparseOperator& A, const Eigen::VectorXd& b,
                  double tol, int max_iters, const Eigen::VectorXd* x0) {
  const int n = static_cast<int>(b.size());
  if (max_iters < 0) max_iters = 10 * n + 100;
  CgResult result;
  result.x = (x0 != nullptr) ? *x0 : Eigen::VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    result.x.setZero();
    return result;
  }
  Eigen::VectorXd inv_diag(n);
  for (int i = 0; i < n; ++i) {
    const double d = A.matrix.coeff(i, i);
    inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }
  Eigen::VectorXd r = b - A.matrix * result.x;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int k = 0; k < max_iters; ++k) {
    result.relative_residual = r.norm() / b_norm;
    if (result.relative_residual <= tol) {
      result.iterations = k;
      return result;
    }
    const Eigen::VectorXd Ap = A.matrix * p;
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0)
      throw std::runtime_error("cg_solve: matrix not positive definite");
    const double alpha = rz / pAp;
    result.x += alpha * p;
    r -= alpha * Ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  result.relative_residual = r.norm() / b_norm;
  std::ostringstream msg;
  msg << "cg_solve: no convergence within " << max_iters
      << " iterations, relative residual " << result.relative_residual;
  throw std::runtime_error(msg.str());
}

SaddleResult saddle_solve(const SparseOperator& M, const SparseOperator& B,
                          const Eigen::VectorXd& rhs_top,
                          const Eigen::VectorXd& rhs_bottom, double tol,
                          double augment) {
  const int n = M.rows();
  const int m = B.rows();
  Eigen::SparseMatrix<double> K = M.matrix;
  if (augment > 0.0) {
    const Eigen::SparseMatrix<double> BtB =
        B.matrix.transpose() * B.matrix;
    K = K + augment * BtB;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> inner;
  inner.compute(K);
  if (inner.info() != Eigen::Success)
    throw std::runtime_error("saddle_solve: inner operator not factorizable");

  const Eigen::VectorXd top =
      augment > 0.0
          ? (rhs_top + augment * (B.matrix.transpose() * rhs_bottom)).eval()
          : rhs_top;

  const auto apply_schur = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return B.matrix * inner.solve(B.matrix.transpose() * v);
  };

  // Jacobi diagonal of the Schur complement, diag(B diag(K)^-1 B^T).
  Eigen::VectorXd k_diag(n);
  for (int i = 0; i < n; ++i) k_diag[i] = K.coeff(i, i);
  Eigen::VectorXd schur_diag = Eigen::VectorXd::Zero(m);
  for (int col = 0; col < B.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(B.matrix, col); it;
         ++it)
      schur_diag[it.row()] += it.value() * it.value() / k_diag[col];
  Eigen::VectorXd inv_diag(m);
  for (int i = 0; i < m; ++i)
    inv_diag[i] = schur_diag[i] > 0.0 ? 1.0 / schur_diag[i] : 1.0;

  const Eigen::VectorXd rhs_schur = B.matrix * inner.solve(top) - rhs_bottom;
  const double scale = std::max(rhs_schur.norm(), rhs_bottom.norm());

  SaddleResult result;
  result.u_bar = Eigen::VectorXd::Zero(m);
  if (scale > 0.0) {
    Eigen::VectorXd r = rhs_schur;
    Eigen::VectorXd zv = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = zv;
    double rz = r.dot(zv);
    const int cap = 20 * m + 200;
    int k = 0;
    for (; k < cap; ++k) {
      if (r.norm() <= tol * scale) break;
      const Eigen::VectorXd Sp = apply_schur(p);
      const double pSp = p.dot(Sp);
      if (pSp <= 0.0)
        throw std::runtime_error(
            "saddle_solve: singular Schur complement (constraint space not "
            "surjective; is the constant mode pinned?)");
      const double alpha = rz / pSp;
      result.u_bar += alpha * p;
      r -= alpha * Sp;
      zv = inv_diag.cwiseProduct(r);
      const double rz_new = r.dot(zv);
      p = zv + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (k == cap)
      throw std::runtime_error("saddle_solve: outer CG reached iteration cap");
    result.outer_iterations = k;
  }
  result.z = inner.solve(top - B.matrix.transpose() * result.u_bar);
  return result;
}

namespace {

// Space-specific assembly hooks shared by the primal flow.
struct CrOps {
  using Function = CRFunction;
  static DofMap dof_map(const Triangulation& m) { return cr_dof_map(m); }
  static SparseOperator stiffness(const Triangulation& m, const P0Function& w,
                                  const DofMap& map) {
    return cr_weighted_stiffness(m, w, map);
  }
  static SparseOperator projection(const Triangulation& m, const DofMap& map) {
    return cr_projection_pairing(m, map);
  }
  static Eigen::VectorXd load(const Triangulation& m, const P0Function& f,
                              const DofMap& map) {
    return cr_load(m, f, map);
  }
  static Eigen::SparseMatrix<double> mass(const Triangulation& m,
                                          const DofMap& map) {
    const Eigen::VectorXd d = cr_mass_diagonal(m, map);
    Eigen::SparseMatrix<double> mat(map.size(), map.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(map.size());
    for (int i = 0; i < map.size(); ++i) trip.emplace_back(i, i, d[i]);
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
  }
  static P0Field grad(const Function& u) { return grad_h(u); }
  static P0Function pi0(const Function& u) { return project_p0(u); }
  static Function make(MeshPtr mesh, Eigen::VectorXd values) {
    return Function{std::move(mesh), std::move(values)};
  }
};

struct P1Ops {
  using Function = P1Function;
  static DofMap dof_map(const Triangulation& m) { return p1_dof_map(m); }
  static SparseOperator stiffness(const Triangulation& m, const P0Function& w,
                                  const DofMap& map) {
    return p1_weighted_stiffness(m, w, map);
  }
  static SparseOperator projection(const Triangulation& m, const DofMap& map) {
    return p1_projection_pairing(m, map);
  }
  static Eigen::VectorXd load(const Triangulation& m, const P0Function& f,
                              const DofMap& map) {
    return p1_load(m, f, map);
  }
  static Eigen::SparseMatrix<double> mass(const Triangulation& m,
                                          const DofMap& map) {
    return p1_mass(m, map).matrix;
  }
  static P0Field grad(const Function& u) { return grad_p1(u); }
  static P0Function pi0(const Function& u) { return project_p0(u); }
  static Function make(MeshPtr mesh, Eigen::VectorXd values) {
    return Function{std::move(mesh), std::move(values)};
  }
};

double bundle_energy(const Triangulation& mesh, const ConvexIntegrand& ci,
                     const LowOrderTerm& lo, const P0Field& grad,
                     const P0Function& bar) {
  double energy = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double phi = ci.phi(grad.values.row(t));
    const double psi = lo.psi(t, bar.values[t]);
    if (phi == kInf || psi == kInf) return kInf;
    energy += mesh.geometry(t).area * (phi + psi);
  }
  return energy;
}

template <typename Ops>
PrimalFlowResult<typename Ops::Function> primal_flow_impl(
    const ConvexIntegrand& ci, const LowOrderTerm& lo,
    const typename Ops::Function& u0, const SolverConfig& cfg) {
  validate(cfg);
  if (!ci.flow_eligible)
    throw std::invalid_argument(
        "primal_flow: integrand radial profile is not flow-eligible");
  if (lo.kind == LowOrderTerm::Kind::obstacle_linear)
    throw std::invalid_argument("primal_flow: obstacle terms need the active "
                                "set solver");
  const MeshPtr mesh = u0.mesh;
  const DofMap map = Ops::dof_map(*mesh);
  const Eigen::SparseMatrix<double> mass = Ops::mass(*mesh, map);

  Eigen::SparseMatrix<double> constant_part = mass / cfg.tau;
  Eigen::VectorXd b_const = Eigen::VectorXd::Zero(map.size());
  if (lo.kind == LowOrderTerm::Kind::linear) {
    b_const = Ops::load(*mesh, lo.data, map);
  } else if (lo.kind == LowOrderTerm::Kind::quadratic) {
    constant_part += lo.alpha * Ops::projection(*mesh, map).matrix;
    b_const = lo.alpha * Ops::load(*mesh, lo.data, map);
  }

  Eigen::VectorXd x = map.gather(u0.values);
  typename Ops::Function u = Ops::make(mesh, map.scatter(x));

  PrimalFlowResult<typename Ops::Function> result{u, {}};
  IterationTrace& trace = result.trace;
  trace.energy.push_back(
      bundle_energy(*mesh, ci, lo, Ops::grad(u), Ops::pi0(u)));

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool pattern_ready = false;
  P0Function weights{mesh, Eigen::VectorXd(mesh->num_elements())};

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const P0Field grad = Ops::grad(u);
    for (int t = 0; t < mesh->num_elements(); ++t) {
      const double w = ci.radial_ratio(grad.values.row(t).norm());
      if (!(w > 0.0) || w == kInf)
        throw std::runtime_error("primal_flow: radial weight not positive");
      weights.values[t] = w;
    }
    Eigen::SparseMatrix<double> system =
        constant_part + Ops::stiffness(*mesh, weights, map).matrix;
    if (!pattern_ready) {
      solver.analyzePattern(system);
      pattern_ready = true;
    }
    solver.factorize(system);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("primal_flow: step system not SPD");
    const Eigen::VectorXd rhs = mass * x / cfg.tau + b_const;
    const Eigen::VectorXd x_new = solver.solve(rhs);

    const Eigen::VectorXd dx = x_new - x;
    const double step_norm = std::sqrt(dx.dot(mass * dx)) / cfg.tau;
    x = x_new;
    u = Ops::make(mesh, map.scatter(x));
    trace.step_norm.push_back(step_norm);
    trace.energy.push_back(
        bundle_energy(*mesh, ci, lo, Ops::grad(u), Ops::pi0(u)));
    trace.iterations = k;
    if (step_norm <= cfg.eps_stop) {
      trace.converged = true;
      break;
    }
  }
  result.u = u;
  return result;
}

}  // namespace

PrimalFlowResult<CRFunction> primal_flow(const ConvexIntegrand& ci,
                                         const LowOrderTerm& lo,
                                         const CRFunction& u0,
                                         const SolverConfig& cfg) {
  return primal_flow_impl<CrOps>(ci, lo, u0, cfg);
}

PrimalFlowResult<P1Function> primal_flow(const ConvexIntegrand& ci,
                                         const LowOrderTerm& lo,
                                         const P1Function& u0,
                                         const SolverConfig& cfg) {
  return primal_flow_impl<P1Ops>(ci, lo, u0, cfg);
}

namespace {

double dual_energy_at_barycenters(const Triangulation& mesh,
                                  const ConvexIntegrand& phi_star,
                                  const RTFunction& z) {
  double value = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const Eigen::Vector2d zt =
        evaluate_rt(z, t, mesh.geometry(t).barycenter);
    value -= mesh.geometry(t).area * phi_star.phi(zt);
  }
  return value;
}

double divergence_misfit(const RTFunction& z, const P0Function& f_h) {
  const P0Function div = divergence(z);
  double sum = 0.0;
  for (int t = 0; t < z.mesh->num_elements(); ++t) {
    const double r = div.values[t] + f_h.values[t];
    sum += z.mesh->geometry(t).area * r * r;
  }
  return std::sqrt(sum);
}

}  // namespace

RTFunction feasible_start(const MeshPtr& mesh, const P0Function& f_h,
                          double tol) {
  const DofMap rt_map = rt_dof_map(*mesh);
  const DofMap p0_map = p0_dof_map(*mesh);
  const SparseOperator M = rt_mass_exact(*mesh, rt_map);
  const SparseOperator B = div_coupling(*mesh, rt_map, p0_map);
  Eigen::VectorXd rhs_bottom(p0_map.size());
  for (int i = 0; i < p0_map.size(); ++i) {
    const int t = p0_map.reduced_to_full[i];
    rhs_bottom[i] = -f_h.values[t] * mesh->geometry(t).area;
  }
  const SaddleResult sol = saddle_solve(
      M, B, Eigen::VectorXd::Zero(rt_map.size()), rhs_bottom, tol);
  return RTFunction{mesh, rt_map.scatter(sol.z)};
}

DualFlowResult dual_flow(const ConvexIntegrand& phi_star,
                         const P0Function& f_h, const RTFunction& z0,
                         const SolverConfig& cfg) {
  validate(cfg);
  if (!phi_star.flow_eligible)
    throw std::invalid_argument(
        "dual_flow: conjugate radial profile is not flow-eligible");
  const MeshPtr mesh = z0.mesh;
  const double f_scale = 1.0 + l2_norm(f_h);
  if (divergence_misfit(z0, f_h) > 10.0 * cfg.linear_tol * f_scale)
    throw std::invalid_argument("dual_flow: infeasible start");

  const DofMap rt_map = rt_dof_map(*mesh);
  const DofMap p0_map = p0_dof_map(*mesh);
  const Eigen::SparseMatrix<double> mass =
      rt_mass_exact(*mesh, rt_map).matrix;
  const SparseOperator B = div_coupling(*mesh, rt_map, p0_map);
  Eigen::VectorXd rhs_bottom(p0_map.size());
  for (int i = 0; i < p0_map.size(); ++i) {
    const int t = p0_map.reduced_to_full[i];
    rhs_bottom[i] = -f_h.values[t] * mesh->geometry(t).area;
  }

  Eigen::VectorXd x = rt_map.gather(z0.values);
  RTFunction z{mesh, rt_map.scatter(x)};
  DualFlowResult result{z, P0Function{mesh, Eigen::VectorXd::Zero(
                                                mesh->num_elements())},
                        {}};
  IterationTrace& trace = result.trace;
  trace.energy.push_back(dual_energy_at_barycenters(*mesh, phi_star, z));

  P0Function weights{mesh, Eigen::VectorXd(mesh->num_elements())};
  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (int t = 0; t < mesh->num_elements(); ++t) {
      const Eigen::Vector2d zt =
          evaluate_rt(z, t, mesh->geometry(t).barycenter);
      const double w = phi_star.radial_ratio(zt.norm());
      if (!(w > 0.0) || w == kInf)
        throw std::runtime_error("dual_flow: radial weight not positive");
      weights.values[t] = w;
    }
    SparseOperator K = rt_mass_modified_weighted(*mesh, weights, rt_map);
    K.matrix += mass / cfg.tau;
    const Eigen::VectorXd rhs_top = mass * x / cfg.tau;
    const SaddleResult step =
        saddle_solve(K, B, rhs_top, rhs_bottom, cfg.linear_tol);

    const Eigen::VectorXd dx = step.z - x;
    const double step_norm = std::sqrt(dx.dot(mass * dx)) / cfg.tau;
    x = step.z;
    z = RTFunction{mesh, rt_map.scatter(x)};
    if (divergence_misfit(z, f_h) > 10.0 * cfg.linear_tol * f_scale)
      throw std::runtime_error("dual_flow: feasibility lost along iteration");
    result.u_bar.values = p0_map.scatter(step.u_bar);
    trace.step_norm.push_back(step_norm);
    trace.energy.push_back(dual_energy_at_barycenters(*mesh, phi_star, z));
    trace.iterations = k;
    if (step_norm <= cfg.eps_stop) {
      trace.converged = true;
      break;
    }
  }
  result.z = z;
  return result;
}

DualFlowResult dual_flow_quadratic(const ConvexIntegrand& phi_star,
                                   const P0Function& g_h, double alpha,
                                   const RTFunction& z0,
                                   const SolverConfig& cfg) {
  validate(cfg);
  if (!phi_star.flow_eligible)
    throw std::invalid_argument(
        "dual_flow_quadratic: conjugate radial profile is not flow-eligible");
  if (alpha <= 0.0)
    throw std::invalid_argument("dual_flow_quadratic: alpha > 0");
  const MeshPtr mesh = z0.mesh;
  const DofMap rt_map = rt_dof_map(*mesh);
  const Eigen::SparseMatrix<double> mass =
      rt_mass_exact(*mesh, rt_map).matrix;

  // (Dpsi*(div z), div y) = (div z / alpha + g, div y)
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd g_pairing = Eigen::VectorXd::Zero(rt_map.size());
  for (int t = 0; t < mesh->num_elements(); ++t) {
    const auto& geo = mesh->geometry(t);
    for (int i = 0; i < 3; ++i) {
      const int gi = rt_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      const double di =
          geo.side_sign[i] * mesh->side(geo.sides[i]).length;
      g_pairing[gi] += g_h.values[t] * di;
      for (int j = 0; j < 3; ++j) {
        const int gj = rt_map.full_to_reduced[geo.sides[j]];
        if (gj < 0) continue;
        const double dj =
            geo.side_sign[j] * mesh->side(geo.sides[j]).length;
        trip.emplace_back(gi, gj, di * dj / (alpha * geo.area));
      }
    }
  }
  Eigen::SparseMatrix<double> divdiv(rt_map.size(), rt_map.size());
  divdiv.setFromTriplets(trip.begin(), trip.end());

  const auto energy = [&](const RTFunction& field) {
    const P0Function div = divergence(field);
    double value = dual_energy_at_barycenters(*mesh, phi_star, field);
    for (int t = 0; t < mesh->num_elements(); ++t) {
      const double d = div.values[t];
      value -= mesh->geometry(t).area *
               (d * d / (2.0 * alpha) + g_h.values[t] * d);
    }
    return value;
  };

  Eigen::VectorXd x = rt_map.gather(z0.values);
  RTFunction z{mesh, rt_map.scatter(x)};
  DualFlowResult result{z, P0Function{mesh, Eigen::VectorXd::Zero(
                                                mesh->num_elements())},
                        {}};
  IterationTrace& trace = result.trace;
  trace.energy.push_back(energy(z));

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool pattern_ready = false;
  P0Function weights{mesh, Eigen::VectorXd(mesh->num_elements())};
  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (int t = 0; t < mesh->num_elements(); ++t) {
      const Eigen::Vector2d zt =
          evaluate_rt(z, t, mesh->geometry(t).barycenter);
      weights.values[t] = phi_star.radial_ratio(zt.norm());
    }
    Eigen::SparseMatrix<double> system =
        rt_mass_modified_weighted(*mesh, weights, rt_map).matrix;
    system += mass / cfg.tau + divdiv;
    if (!pattern_ready) {
      solver.analyzePattern(system);
      pattern_ready = true;
    }
    solver.factorize(system);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("dual_flow_quadratic: step system not SPD");
    const Eigen::VectorXd rhs = mass * x / cfg.tau - g_pairing;
    const Eigen::VectorXd x_new = solver.solve(rhs);
    const Eigen::VectorXd dx = x_new - x;
    const double step_norm = std::sqrt(dx.dot(mass * dx)) / cfg.tau;
    x = x_new;
    z = RTFunction{mesh, rt_map.scatter(x)};
    trace.step_norm.push_back(step_norm);
    trace.energy.push_back(energy(z));
    trace.iterations = k;
    if (step_norm <= cfg.eps_stop) {
      trace.converged = true;
      break;
    }
  }
  result.z = z;
  const P0Function div = divergence(result.z);
  for (int t = 0; t < mesh->num_elements(); ++t)
    result.u_bar.values[t] = g_h.values[t] + div.values[t] / alpha;
  return result;
}

AdmmResult admm(const ConvexIntegrand& ci, const LowOrderTerm& lo,
                const MeshPtr& mesh, const SolverConfig& cfg,
                double tau_admm) {
  validate(cfg);
  if (!ci.prox)
    throw std::invalid_argument("admm: integrand carries no proximal map");
  if (tau_admm <= 0.0) throw std::invalid_argument("admm: tau_admm > 0");
  const DofMap map = p1_dof_map(*mesh);
  const P0Function ones{mesh, Eigen::VectorXd::Ones(mesh->num_elements())};

  Eigen::SparseMatrix<double> system =
      tau_admm * p1_weighted_stiffness(*mesh, ones, map).matrix;
  Eigen::VectorXd b_const = Eigen::VectorXd::Zero(map.size());
  if (lo.kind == LowOrderTerm::Kind::linear) {
    b_const = p1_load(*mesh, lo.data, map);
  } else if (lo.kind == LowOrderTerm::Kind::quadratic) {
    system += lo.alpha * p1_projection_pairing(*mesh, map).matrix;
    b_const = lo.alpha * p1_load(*mesh, lo.data, map);
  } else if (lo.kind != LowOrderTerm::Kind::none) {
    throw std::invalid_argument("admm: unsupported low order term");
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(system);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("admm: u-step system not SPD");

  const int m = mesh->num_elements();
  AdmmResult result{P1Function{mesh, Eigen::VectorXd::Zero(mesh->num_nodes())},
                    P0Field{mesh, Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(m, 2)},
                    {}};
  Eigen::Matrix<double, Eigen::Dynamic, 2> lambda =
      Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(m, 2);
  Eigen::Matrix<double, Eigen::Dynamic, 2> q_prev =
      Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(m, 2);

  const auto objective = [&](const P0Field& q, const P1Function& u) {
    double value = 0.0;
    const P0Function bar = project_p0(u);
    for (int t = 0; t < m; ++t) {
      const double phi = ci.phi(q.values.row(t));
      const double psi = lo.psi(t, bar.values[t]);
      if (phi == kInf || psi == kInf) return kInf;
      value += mesh->geometry(t).area * (phi + psi);
    }
    return value;
  };

  IterationTrace& trace = result.trace;
  trace.energy.push_back(objective(result.q, result.u));
  for (int k = 1; k <= cfg.max_iters; ++k) {
    // u-step: tau (grad u, grad v) [+ alpha (Pi u, Pi v)] =
    //         b_const - (lambda, grad v) + tau (q, grad v)
    P0Field combo{mesh, tau_admm * result.q.values - lambda};
    const Eigen::VectorXd rhs =
        b_const + p1_field_gradient_pairing(*mesh, combo, map);
    const Eigen::VectorXd x = solver.solve(rhs);
    result.u.values = map.scatter(x);
    const P0Field grad = grad_p1(result.u);
    // q-step: elementwise prox of phi
    for (int t = 0; t < m; ++t) {
      const Eigen::Vector2d v =
          grad.values.row(t).transpose() + lambda.row(t).transpose() / tau_admm;
      result.q.values.row(t) = ci.prox(v, tau_admm);
    }
    // multiplier ascent; primal residual ||grad u - q|| and dual residual
    // tau ||q^k - q^{k-1}|| (a vanishing primal residual alone does not
    // certify optimality when the objective is linear in u)
    double primal_sq = 0.0;
    double dual_sq = 0.0;
    for (int t = 0; t < m; ++t) {
      const Eigen::Vector2d d =
          grad.values.row(t) - result.q.values.row(t);
      lambda.row(t) += tau_admm * d.transpose();
      primal_sq += mesh->geometry(t).area * d.squaredNorm();
      dual_sq += mesh->geometry(t).area *
                 (result.q.values.row(t) - q_prev.row(t)).squaredNorm();
    }
    q_prev = result.q.values;
    const double residual =
        std::max(std::sqrt(primal_sq), tau_admm * std::sqrt(dual_sq));
    trace.step_norm.push_back(residual);
    trace.energy.push_back(objective(result.q, result.u));
    trace.iterations = k;
    if (residual <= cfg.eps_stop) {
      trace.converged = true;
      break;
    }
  }
  return result;
}

ObstacleResult obstacle_active_set(const MeshPtr& mesh, const P0Function& f_h,
                                   const SolverConfig& cfg) {
  validate(cfg);
  if (!mesh->has_dirichlet_boundary())
    throw std::invalid_argument("obstacle_active_set: needs a Dirichlet part");
  const DofMap map = cr_dof_map(*mesh);
  const P0Function ones{mesh, Eigen::VectorXd::Ones(mesh->num_elements())};
  const SparseOperator A = cr_weighted_stiffness(*mesh, ones, map);
  const SparseOperator C = cr_barycenter_map(*mesh, map);
  const Eigen::VectorXd load = cr_load(*mesh, f_h, map);
  const int m = mesh->num_elements();
  Eigen::VectorXd areas(m);
  for (int t = 0; t < m; ++t) areas[t] = mesh->geometry(t).area;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> a_solver;
  a_solver.compute(A.matrix);
  if (a_solver.info() != Eigen::Success)
    throw std::runtime_error("obstacle_active_set: stiffness not SPD");

  // weighted constraint matrix rows (M_0 C)_T used on the active set
  const Eigen::SparseMatrix<double> weighted_c = areas.asDiagonal() * C.matrix;

  ObstacleResult result{
      CRFunction{mesh, Eigen::VectorXd::Zero(mesh->num_sides())},
      P0Function{mesh, Eigen::VectorXd::Zero(m)},
      {}};
  IterationTrace& trace = result.trace;

  std::set<int> active;
  Eigen::VectorXd u = a_solver.solve(load);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    if (!active.empty()) {
      // equality-constrained solve: A u + (M_0 C)_A^T mu_A = load,
      // (M_0 C)_A u = 0, by Schur CG with the cached factorization
      const int na = static_cast<int>(active.size());
      std::vector<int> rows(active.begin(), active.end());
      Eigen::SparseMatrix<double> Ca(na, map.size());
      std::vector<Eigen::Triplet<double>> trip;
      const Eigen::SparseMatrix<double, Eigen::RowMajor> wc_rm = weighted_c;
      for (int i = 0; i < na; ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 wc_rm, rows[i]);
             it; ++it)
          trip.emplace_back(i, static_cast<int>(it.col()), it.value());
      Ca.setFromTriplets(trip.begin(), trip.end());

      const Eigen::VectorXd a_inv_load = a_solver.solve(load);
      const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return Ca * a_solver.solve(Ca.transpose() * v);
      };
      Eigen::VectorXd rhs = Ca * a_inv_load;
      // plain CG on the dense-ish Schur block
      Eigen::VectorXd lam = Eigen::VectorXd::Zero(na);
      Eigen::VectorXd r = rhs;
      Eigen::VectorXd p = r;
      double rr = r.squaredNorm();
      // the constraint violation Pi_0 u on the contact set equals this
      // residual divided by element areas, so the solve runs to stagnation
      const double stop = 1e-15 * std::max(1.0, rhs.norm());
      int stalled = 0;
      for (int it = 0; it < 40 * na + 400 && std::sqrt(rr) > stop; ++it) {
        const Eigen::VectorXd Sp = apply(p);
        const double alpha = rr / p.dot(Sp);
        lam += alpha * p;
        r -= alpha * Sp;
        const double rr_new = r.squaredNorm();
        stalled = (rr_new >= 0.99 * rr) ? stalled + 1 : 0;
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        if (stalled > 50) break;
      }
      u = a_solver.solve(load - Ca.transpose() * lam);
      mu.setZero();
      for (int i = 0; i < na; ++i) mu[rows[i]] = lam[i];
    } else {
      u = a_solver.solve(load);
      mu.setZero();
    }

    const Eigen::VectorXd bar = C.matrix * u;
    std::set<int> next_active;
    for (int t = 0; t < m; ++t)
      if (mu[t] + bar[t] < 0.0) next_active.insert(t);

    // KKT residual: feasibility, sign, complementarity
    double kkt = 0.0;
    for (int t = 0; t < m; ++t) {
      kkt = std::max(kkt, std::max(0.0, -bar[t]));
      kkt = std::max(kkt, std::max(0.0, mu[t]));
      kkt = std::max(kkt, std::abs(mu[t] * bar[t]) * areas[t]);
    }
    const double energy =
        0.5 * u.dot(A.matrix * u) - load.dot(u);
    trace.energy.push_back(energy);
    trace.step_norm.push_back(kkt);
    trace.iterations = k;
    if (next_active == active && kkt <= cfg.eps_stop) {
      trace.converged = true;
      break;
    }
    active = std::move(next_active);
  }

  result.u.values = map.scatter(u);
  result.mu.values = mu;
  return result;
}

CRFunction solve_cr_poisson(const MeshPtr& mesh, const P0Function& f_h) {
  const DofMap map = cr_dof_map(*mesh);
  const P0Function ones{mesh, Eigen::VectorXd::Ones(mesh->num_elements())};
  const SparseOperator A = cr_weighted_stiffness(*mesh, ones, map);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(A.matrix);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("solve_cr_poisson: stiffness not SPD");
  const Eigen::VectorXd x = solver.solve(cr_load(*mesh, f_h, map));
  return CRFunction{mesh, map.scatter(x)};
}

P1Function solve_p1_poisson(const MeshPtr& mesh, const P0Function& f_h) {
  const DofMap map = p1_dof_map(*mesh);
  const P0Function ones{mesh, Eigen::VectorXd::Ones(mesh->num_elements())};
  const SparseOperator A = p1_weighted_stiffness(*mesh, ones, map);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(A.matrix);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("solve_p1_poisson: stiffness not SPD");
  const Eigen::VectorXd x = solver.solve(p1_load(*mesh, f_h, map));
  return P1Function{mesh, map.scatter(x)};
}

}  // namespace femdual
