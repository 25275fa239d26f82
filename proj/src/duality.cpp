#include "femdual/duality.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "femdual/quadrature.hpp"

namespace femdual {

double primal_energy(const DiscreteProblem& pb, const CRFunction& u) {
  const Triangulation& mesh = *pb.mesh;
  const P0Field grad = grad_h(u);
  const P0Function bar = project_p0(u);
  double energy = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double phi = pb.phi.phi(grad.values.row(t));
    if (phi == kInf) return kInf;
    const double psi = pb.psi.psi(t, bar.values[t]);
    if (psi == kInf) return kInf;
    energy += mesh.geometry(t).area * (phi + psi);
  }
  return energy;
}

double primal_energy(const DiscreteProblem& pb, const P1Function& u) {
  const Triangulation& mesh = *pb.mesh;
  const P0Field grad = grad_p1(u);
  const P0Function bar = project_p0(u);
  double energy = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double phi = pb.phi.phi(grad.values.row(t));
    if (phi == kInf) return kInf;
    const double psi = pb.psi.psi(t, bar.values[t]);
    if (psi == kInf) return kInf;
    energy += mesh.geometry(t).area * (phi + psi);
  }
  return energy;
}

DualEnergy dual_energy(const DiscreteProblem& pb, const RTFunction& z) {
  const Triangulation& mesh = *pb.mesh;
  const P0Field bar = project_p0(z);
  const P0Function div = divergence(z);
  DualEnergy result{0.0, {}};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double phi_star = pb.phi.phi_star(bar.values.row(t));
    const double psi_star =
        pb.psi.psi_star(t, div.values[t], pb.feasibility_tol);
    if (phi_star == kInf || psi_star == kInf) {
      result.infeasible_elements.push_back(t);
      continue;
    }
    result.value -= mesh.geometry(t).area * (phi_star + psi_star);
  }
  if (!result.feasible()) result.value = -kInf;
  return result;
}

double euler_lagrange_residual(const DiscreteProblem& pb, const CRFunction& u,
                               const P0Function* multiplier) {
  const Triangulation& mesh = *pb.mesh;
  const DofMap cr_map = cr_dof_map(mesh);
  const P0Field grad = grad_h(u);
  const P0Function bar = project_p0(u);
  Eigen::VectorXd residual = Eigen::VectorXd::Zero(cr_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    const Eigen::Vector2d dphi = pb.phi.d_phi(grad.values.row(t));
    double dpsi;
    if (multiplier != nullptr)
      dpsi = multiplier->values[t] - pb.psi.data.values[t];
    else
      dpsi = pb.psi.kind == LowOrderTerm::Kind::none
                 ? 0.0
                 : pb.psi.d_psi(t, bar.values[t]);
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      residual[gi] += geo.area * dphi.dot(-2.0 * bg.row(i));
      residual[gi] += geo.area / 3.0 * dpsi;
    }
  }
  const Eigen::VectorXd mass = cr_mass_diagonal(mesh, cr_map);
  double norm_sq = 0.0;
  for (int i = 0; i < cr_map.size(); ++i)
    norm_sq += residual[i] * residual[i] / mass[i];
  return std::sqrt(norm_sq);
}

RTFunction reconstruct_flux(const DiscreteProblem& pb, const CRFunction& u,
                            const P0Function* multiplier) {
  const Triangulation& mesh = *pb.mesh;
  const double res = euler_lagrange_residual(pb, u, multiplier);
  if (res > pb.reconstruction_gate) {
    std::ostringstream msg;
    msg << "reconstruct_flux: Euler-Lagrange residual " << res
        << " exceeds gate " << pb.reconstruction_gate;
    throw std::runtime_error(msg.str());
  }

  const P0Field grad = grad_h(u);
  const P0Function bar = project_p0(u);

  // per-element divergence coefficient c_T = Dpsi_h(x, u(x_T))
  Eigen::VectorXd c(mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    if (multiplier != nullptr)
      c[t] = multiplier->values[t] - pb.psi.data.values[t];
    else
      c[t] = pb.psi.kind == LowOrderTerm::Kind::none
                 ? 0.0
                 : pb.psi.d_psi(t, bar.values[t]);
  }

  // trace of the formula on side S seen from element T
  const auto trace = [&](int t, int s) {
    const Side& side = mesh.side(s);
    const Eigen::Vector2d dphi = pb.phi.d_phi(grad.values.row(t));
    const Eigen::Vector2d offset =
        side.midpoint - mesh.geometry(t).barycenter;
    return (dphi + c[t] / kDim * offset).dot(side.normal);
  };

  RTFunction z{pb.mesh, Eigen::VectorXd::Zero(mesh.num_sides())};
  double scale = 1.0;
  for (int t = 0; t < mesh.num_elements(); ++t)
    scale = std::max(scale, pb.phi.d_phi(grad.values.row(t)).norm());
  double max_jump = 0.0;
  for (int s = 0; s < mesh.num_sides(); ++s) {
    const Side& side = mesh.side(s);
    const double minus_trace = trace(side.t_minus, s);
    if (side.boundary()) {
      if (side.label == SideLabel::neumann) {
        max_jump = std::max(max_jump, std::abs(minus_trace));
        z.values[s] = 0.0;
      } else {
        z.values[s] = minus_trace;
      }
      continue;
    }
    const double plus_trace = trace(side.t_plus, s);
    max_jump = std::max(max_jump, std::abs(minus_trace - plus_trace));
    z.values[s] = 0.5 * (minus_trace + plus_trace);
  }
  if (max_jump > std::max(pb.reconstruction_gate, 1e-9) * scale) {
    std::ostringstream msg;
    msg << "reconstruct_flux: normal trace jump " << max_jump
        << " exceeds admissibility tolerance";
    throw std::runtime_error(msg.str());
  }
  return z;
}

CRFunction reconstruct_primal(const DiscreteProblem& pb, const RTFunction& z,
                              const P0Function& u_bar, double continuity_tol) {
  const Triangulation& mesh = *pb.mesh;
  const P0Field bar = project_p0(z);

  const auto trace = [&](int t, int s) {
    const Eigen::Vector2d slope = pb.phi.d_phi_star(bar.values.row(t));
    const Eigen::Vector2d offset =
        mesh.side(s).midpoint - mesh.geometry(t).barycenter;
    return u_bar.values[t] + slope.dot(offset);
  };

  double scale = 1.0 + u_bar.values.cwiseAbs().maxCoeff();
  CRFunction u{pb.mesh, Eigen::VectorXd::Zero(mesh.num_sides())};
  double max_jump = 0.0;
  for (int s = 0; s < mesh.num_sides(); ++s) {
    const Side& side = mesh.side(s);
    const double minus_trace = trace(side.t_minus, s);
    if (side.boundary()) {
      if (side.label == SideLabel::dirichlet) {
        max_jump = std::max(max_jump, std::abs(minus_trace));
        u.values[s] = 0.0;
      } else {
        u.values[s] = minus_trace;
      }
      continue;
    }
    const double plus_trace = trace(side.t_plus, s);
    max_jump = std::max(max_jump, std::abs(minus_trace - plus_trace));
    u.values[s] = 0.5 * (minus_trace + plus_trace);
  }
  if (max_jump > continuity_tol * scale) {
    std::ostringstream msg;
    msg << "reconstruct_primal: midpoint continuity residual " << max_jump
        << " exceeds " << continuity_tol * scale
        << "; the input pair does not solve the mixed problem";
    throw std::runtime_error(msg.str());
  }
  return u;
}

double element_second_moment(const Triangulation& mesh, int t) {
  const auto& elem = mesh.element(t);
  const auto& geo = mesh.geometry(t);
  double sum_sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d e =
        mesh.node(elem[(i + 1) % 3]) - mesh.node(elem[i]);
    sum_sq += e.squaredNorm();
  }
  return geo.area * sum_sq / 36.0;
}

P0Function classical_multiplier_correction(const CRFunction& u,
                                           const P0Function& f_h) {
  const Triangulation& mesh = *u.mesh;
  P0Function out = project_p0(u);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    out.values[t] += f_h.values[t] /
                     (kDim * kDim * mesh.geometry(t).area) *
                     element_second_moment(mesh, t);
  }
  return out;
}

std::optional<double> duality_gap(const DiscreteProblem& pb,
                                  const CRFunction& u, const RTFunction& z) {
  const DualEnergy dual = dual_energy(pb, z);
  if (!dual.feasible()) return std::nullopt;
  return primal_energy(pb, u) - dual.value;
}

EstimatorResult aposteriori_eta(const DiscreteProblem& pb,
                                const P1Function& u_c, const RTFunction& z) {
  const Triangulation& mesh = *pb.mesh;
  const P0Function div = divergence(z);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double f = pb.psi.data.values[t];
    if (std::abs(div.values[t] + f) >
        pb.feasibility_tol * (1.0 + std::abs(f)))
      throw std::invalid_argument(
          "aposteriori_eta: flux violates -div z = f_h");
  }
  const P0Field grad = grad_p1(u_c);
  const TriQuadrature& rule = edge_midpoint_rule();
  EstimatorResult result{0.0, Eigen::VectorXd::Zero(mesh.num_elements())};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const Eigen::Vector2d g = grad.values.row(t);
    const double contribution =
        2.0 * integrate_element(mesh, t, rule, [&](const Eigen::Vector2d& x) {
          const Eigen::Vector2d zx = evaluate_rt(z, t, x);
          return pb.phi.phi(g) - zx.dot(g) + pb.phi.phi_star(zx);
        });
    result.per_element[t] = contribution;
    result.eta_total += contribution;
  }
  result.eta_total = std::sqrt(std::max(0.0, result.eta_total));
  return result;
}

void write_estimator_csv(std::ostream& out, const Triangulation& mesh,
                         const EstimatorResult& result) {
  char buf[128];
  out << "element,x_T,y_T,eta_sq_contribution\n";
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const Eigen::Vector2d& c = mesh.geometry(t).barycenter;
    std::snprintf(buf, sizeof(buf), "%d,%.16g,%.16g,%.16g", t, c.x(), c.y(),
                  result.per_element[t]);
    out << buf << '\n';
  }
}

double aposteriori_eta_tilde(const P1Function& u_c, const CRFunction& u_cr,
                             const P0Function& f_h) {
  const Triangulation& mesh = *u_c.mesh;
  const P0Field gc = grad_p1(u_c);
  const P0Field gcr = grad_h(u_cr);
  double grad_term = 0.0;
  double data_term = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    grad_term += mesh.geometry(t).area *
                 (gc.values.row(t) - gcr.values.row(t)).squaredNorm();
    const double c = f_h.values[t] / kDim;
    data_term += c * c * element_second_moment(mesh, t);
  }
  return std::sqrt(grad_term) + std::sqrt(data_term);
}

}  // namespace femdual
