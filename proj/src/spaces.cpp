#include "femdual/spaces.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "femdual/quadrature.hpp"

namespace femdual {

Eigen::VectorXd DofMap::gather(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out[i] = full[reduced_to_full[i]];
  return out;
}

Eigen::VectorXd DofMap::scatter(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(full_to_reduced.size());
  for (int i = 0; i < size(); ++i) out[reduced_to_full[i]] = reduced[i];
  return out;
}

namespace {

DofMap map_from_mask(const std::vector<bool>& constrained) {
  DofMap map;
  map.full_to_reduced.assign(constrained.size(), -1);
  for (std::size_t i = 0; i < constrained.size(); ++i) {
    if (!constrained[i]) {
      map.full_to_reduced[i] = static_cast<int>(map.reduced_to_full.size());
      map.reduced_to_full.push_back(static_cast<int>(i));
    }
  }
  return map;
}

}  // namespace

DofMap cr_dof_map(const Triangulation& mesh) {
  std::vector<bool> constrained(mesh.num_sides(), false);
  for (int s = 0; s < mesh.num_sides(); ++s)
    constrained[s] = mesh.side(s).boundary() &&
                     mesh.side(s).label == SideLabel::dirichlet;
  return map_from_mask(constrained);
}

DofMap rt_dof_map(const Triangulation& mesh) {
  std::vector<bool> constrained(mesh.num_sides(), false);
  for (int s = 0; s < mesh.num_sides(); ++s)
    constrained[s] = mesh.side(s).boundary() &&
                     mesh.side(s).label == SideLabel::neumann;
  return map_from_mask(constrained);
}

std::vector<bool> dirichlet_vertices(const Triangulation& mesh) {
  std::vector<bool> on_dirichlet(mesh.num_nodes(), false);
  for (const Side& s : mesh.sides()) {
    if (s.boundary() && s.label == SideLabel::dirichlet) {
      on_dirichlet[s.nodes[0]] = true;
      on_dirichlet[s.nodes[1]] = true;
    }
  }
  return on_dirichlet;
}

DofMap p1_dof_map(const Triangulation& mesh) {
  return map_from_mask(dirichlet_vertices(mesh));
}

DofMap p0_dof_map(const Triangulation& mesh) {
  std::vector<bool> constrained(mesh.num_elements(), false);
  if (!mesh.has_dirichlet_boundary())
    constrained.back() = true;  // pin the constant mode
  return map_from_mask(constrained);
}

// -- evaluation ---------------------------------------------------------------

double evaluate_cr(const CRFunction& u, int t, const Eigen::Vector2d& x) {
  const auto& geo = u.mesh->geometry(t);
  const Eigen::Vector3d lambda = barycentric_coordinates(*u.mesh, t, x);
  double value = 0.0;
  for (int i = 0; i < 3; ++i)
    value += u.values[geo.sides[i]] * (1.0 - 2.0 * lambda[i]);
  return value;
}

double evaluate_p1(const P1Function& u, int t, const Eigen::Vector2d& x) {
  const auto& elem = u.mesh->element(t);
  const Eigen::Vector3d lambda = barycentric_coordinates(*u.mesh, t, x);
  double value = 0.0;
  for (int i = 0; i < 3; ++i) value += u.values[elem[i]] * lambda[i];
  return value;
}

double evaluate_p2(const P2Function& u, int t, const Eigen::Vector2d& x) {
  const auto& elem = u.mesh->element(t);
  const auto& geo = u.mesh->geometry(t);
  const Eigen::Vector3d l = barycentric_coordinates(*u.mesh, t, x);
  double value = 0.0;
  for (int i = 0; i < 3; ++i)
    value += u.vertex_values[elem[i]] * l[i] * (2.0 * l[i] - 1.0);
  // side node i sits opposite vertex i, between vertices i+1 and i+2
  for (int i = 0; i < 3; ++i)
    value += u.side_values[geo.sides[i]] * 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
  return value;
}

Eigen::Vector2d gradient_p2(const P2Function& u, int t,
                            const Eigen::Vector2d& x) {
  const auto& elem = u.mesh->element(t);
  const auto& geo = u.mesh->geometry(t);
  const Eigen::Vector3d l = barycentric_coordinates(*u.mesh, t, x);
  const Eigen::Matrix<double, 3, 2> g = barycentric_gradients(*u.mesh, t);
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i)
    grad += u.vertex_values[elem[i]] * (4.0 * l[i] - 1.0) *
            g.row(i).transpose();
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    grad += u.side_values[geo.sides[i]] * 4.0 *
            (l[a] * g.row(b).transpose() + l[b] * g.row(a).transpose());
  }
  return grad;
}

Eigen::Vector2d rt_basis(const Triangulation& mesh, int t, int local_side,
                         const Eigen::Vector2d& x) {
  const auto& geo = mesh.geometry(t);
  const Side& side = mesh.side(geo.sides[local_side]);
  const Eigen::Vector2d& opposite = mesh.node(mesh.element(t)[local_side]);
  const double factor =
      geo.side_sign[local_side] * side.length / (2.0 * geo.area);
  return factor * (x - opposite);
}

Eigen::Vector2d evaluate_rt(const RTFunction& z, int t,
                            const Eigen::Vector2d& x) {
  const Eigen::Vector3d lambda = barycentric_coordinates(*z.mesh, t, x);
  if (lambda.minCoeff() < -1e-12)
    throw std::domain_error("evaluate_rt: point outside element");
  const auto& geo = z.mesh->geometry(t);
  Eigen::Vector2d value = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i)
    value += z.values[geo.sides[i]] * rt_basis(*z.mesh, t, i, x);
  return value;
}

// -- differential operators ---------------------------------------------------

P0Field grad_h(const CRFunction& u) {
  const Triangulation& mesh = *u.mesh;
  P0Field g{u.mesh, Eigen::Matrix<double, Eigen::Dynamic, 2>(
                        mesh.num_elements(), 2)};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i)
      grad += u.values[geo.sides[i]] * (-2.0) * bg.row(i).transpose();
    g.values.row(t) = grad;
  }
  return g;
}

P0Field grad_p1(const P1Function& u) {
  const Triangulation& mesh = *u.mesh;
  P0Field g{u.mesh, Eigen::Matrix<double, Eigen::Dynamic, 2>(
                        mesh.num_elements(), 2)};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i)
      grad += u.values[elem[i]] * bg.row(i).transpose();
    g.values.row(t) = grad;
  }
  return g;
}

P0Function divergence(const RTFunction& z) {
  const Triangulation& mesh = *z.mesh;
  P0Function d{z.mesh, Eigen::VectorXd(mesh.num_elements())};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    double flux = 0.0;  // |T| div z = sum of signed side fluxes
    for (int i = 0; i < 3; ++i)
      flux += geo.side_sign[i] * mesh.side(geo.sides[i]).length *
              z.values[geo.sides[i]];
    d.values[t] = flux / geo.area;
  }
  return d;
}

// -- projections and interpolants ---------------------------------------------

P0Function project_p0(const MeshPtr& mesh, const ScalarField& f) {
  const TriQuadrature& rule = edge_midpoint_rule();
  P0Function p{mesh, Eigen::VectorXd(mesh->num_elements())};
  for (int t = 0; t < mesh->num_elements(); ++t)
    p.values[t] =
        integrate_element(*mesh, t, rule, f) / mesh->geometry(t).area;
  return p;
}

P0Field project_p0(const MeshPtr& mesh, const VectorField& f) {
  const TriQuadrature& rule = edge_midpoint_rule();
  P0Field p{mesh,
            Eigen::Matrix<double, Eigen::Dynamic, 2>(mesh->num_elements(), 2)};
  for (int t = 0; t < mesh->num_elements(); ++t) {
    Eigen::Vector2d avg = Eigen::Vector2d::Zero();
    avg.x() = integrate_element(*mesh, t, rule,
                                [&](const Eigen::Vector2d& x) { return f(x).x(); });
    avg.y() = integrate_element(*mesh, t, rule,
                                [&](const Eigen::Vector2d& x) { return f(x).y(); });
    p.values.row(t) = avg / mesh->geometry(t).area;
  }
  return p;
}

P0Function project_p0(const CRFunction& u) {
  const Triangulation& mesh = *u.mesh;
  P0Function p{u.mesh, Eigen::VectorXd(mesh.num_elements())};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    p.values[t] = (u.values[geo.sides[0]] + u.values[geo.sides[1]] +
                   u.values[geo.sides[2]]) /
                  3.0;
  }
  return p;
}

P0Function project_p0(const P1Function& u) {
  const Triangulation& mesh = *u.mesh;
  P0Function p{u.mesh, Eigen::VectorXd(mesh.num_elements())};
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    p.values[t] =
        (u.values[elem[0]] + u.values[elem[1]] + u.values[elem[2]]) / 3.0;
  }
  return p;
}

P0Field project_p0(const RTFunction& z) {
  const Triangulation& mesh = *z.mesh;
  P0Field p{z.mesh,
            Eigen::Matrix<double, Eigen::Dynamic, 2>(mesh.num_elements(), 2)};
  for (int t = 0; t < mesh.num_elements(); ++t)
    p.values.row(t) = evaluate_rt(z, t, mesh.geometry(t).barycenter);
  return p;
}

P0Function sample_barycenters(const MeshPtr& mesh, const ScalarField& g) {
  P0Function p{mesh, Eigen::VectorXd(mesh->num_elements())};
  for (int t = 0; t < mesh->num_elements(); ++t)
    p.values[t] = g(mesh->geometry(t).barycenter);
  return p;
}

CRFunction interpolate_cr(const MeshPtr& mesh, const ScalarField& v) {
  CRFunction u{mesh, Eigen::VectorXd::Zero(mesh->num_sides())};
  const auto gauss = gauss2_unit();
  for (int s = 0; s < mesh->num_sides(); ++s) {
    const Side& side = mesh->side(s);
    const Eigen::Vector2d a = mesh->node(side.nodes[0]);
    const Eigen::Vector2d b = mesh->node(side.nodes[1]);
    double avg = 0.0;
    for (const double g : gauss) avg += 0.5 * v(a + g * (b - a));
    u.values[s] = avg;
  }
  for (int s = 0; s < mesh->num_sides(); ++s)
    if (mesh->side(s).boundary() &&
        mesh->side(s).label == SideLabel::dirichlet)
      u.values[s] = 0.0;
  return u;
}

RTFunction interpolate_rt(const MeshPtr& mesh, const VectorField& z) {
  RTFunction f{mesh, Eigen::VectorXd::Zero(mesh->num_sides())};
  const auto gauss = gauss2_unit();
  for (int s = 0; s < mesh->num_sides(); ++s) {
    const Side& side = mesh->side(s);
    const Eigen::Vector2d a = mesh->node(side.nodes[0]);
    const Eigen::Vector2d b = mesh->node(side.nodes[1]);
    double avg = 0.0;
    for (const double g : gauss) avg += 0.5 * z(a + g * (b - a)).dot(side.normal);
    f.values[s] = avg;
  }
  for (int s = 0; s < mesh->num_sides(); ++s)
    if (mesh->side(s).boundary() && mesh->side(s).label == SideLabel::neumann)
      f.values[s] = 0.0;
  return f;
}

P1Function interpolate_p1(const MeshPtr& mesh, const ScalarField& v) {
  P1Function u{mesh, Eigen::VectorXd(mesh->num_nodes())};
  for (int i = 0; i < mesh->num_nodes(); ++i) u.values[i] = v(mesh->node(i));
  const auto on_dirichlet = dirichlet_vertices(*mesh);
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (on_dirichlet[i]) u.values[i] = 0.0;
  return u;
}

P2Function enrich_cr(const CRFunction& v) {
  const Triangulation& mesh = *v.mesh;
  P2Function e{v.mesh, Eigen::VectorXd::Zero(mesh.num_nodes()),
               v.values};
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const auto& geo = mesh.geometry(t);
    for (int i = 0; i < 3; ++i) {
      // trace of the elementwise affine v at vertex i: value at barycentric
      // corner, expressed through the three side coefficients
      double trace = 0.0;
      for (int j = 0; j < 3; ++j)
        trace += v.values[geo.sides[j]] * (i == j ? -1.0 : 1.0);
      e.vertex_values[elem[i]] += trace;
      counts[elem[i]] += 1.0;
    }
  }
  for (int i = 0; i < mesh.num_nodes(); ++i)
    e.vertex_values[i] /= counts[i];
  const auto on_dirichlet = dirichlet_vertices(mesh);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (on_dirichlet[i]) e.vertex_values[i] = 0.0;
  return e;
}

void write_dof_csv(std::ostream& out, const Eigen::VectorXd& values) {
  char buf[64];
  out << "dof_index,value\n";
  for (int i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.16g", i, values[i]);
    out << buf << '\n';
  }
}

// -- norms ----------------------------------------------------------------------

double l2_norm(const P0Function& f) {
  double sum = 0.0;
  for (int t = 0; t < f.mesh->num_elements(); ++t)
    sum += f.mesh->geometry(t).area * f.values[t] * f.values[t];
  return std::sqrt(sum);
}

double l2_norm(const P0Field& f) {
  double sum = 0.0;
  for (int t = 0; t < f.mesh->num_elements(); ++t)
    sum += f.mesh->geometry(t).area * f.values.row(t).squaredNorm();
  return std::sqrt(sum);
}

double l2_norm(const CRFunction& u) {
  // products of affine functions integrate exactly with the midpoint rule,
  // where the CR basis is Kronecker
  double sum = 0.0;
  for (int t = 0; t < u.mesh->num_elements(); ++t) {
    const auto& geo = u.mesh->geometry(t);
    double local = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double c = u.values[geo.sides[i]];
      local += c * c;
    }
    sum += geo.area / 3.0 * local;
  }
  return std::sqrt(sum);
}

double l2_norm(const P1Function& u) {
  double sum = 0.0;
  for (int t = 0; t < u.mesh->num_elements(); ++t) {
    const auto& elem = u.mesh->element(t);
    double local = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double m = 0.5 * (u.values[elem[(i + 1) % 3]] +
                              u.values[elem[(i + 2) % 3]]);
      local += m * m;
    }
    sum += u.mesh->geometry(t).area / 3.0 * local;
  }
  return std::sqrt(sum);
}

}  // namespace femdual
