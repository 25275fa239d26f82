#include "femdual/assembly.hpp"

#include <stdexcept>
#include <vector>

#include "femdual/quadrature.hpp"

namespace femdual {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseOperator from_triplets(int rows, int cols,
                             const std::vector<Triplet>& triplets,
                             bool symmetric) {
  SparseOperator op;
  op.matrix.resize(rows, cols);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.symmetric = symmetric;
  return op;
}

}  // namespace

SparseOperator cr_weighted_stiffness(const Triangulation& mesh,
                                     const P0Function& weights,
                                     const DofMap& cr_map) {
  if (weights.values.minCoeff() <= 0.0)
    throw std::invalid_argument("cr_weighted_stiffness: nonpositive weight");
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    const double c = 4.0 * weights.values[t] * geo.area;
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = cr_map.full_to_reduced[geo.sides[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, c * bg.row(i).dot(bg.row(j)));
      }
    }
  }
  return from_triplets(cr_map.size(), cr_map.size(), triplets, true);
}

Eigen::VectorXd cr_load(const Triangulation& mesh, const P0Function& f_h,
                        const DofMap& cr_map) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(cr_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const double c = f_h.values[t] * geo.area / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi >= 0) b[gi] += c;
    }
  }
  return b;
}

Eigen::VectorXd cr_mass_diagonal(const Triangulation& mesh,
                                 const DofMap& cr_map) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(cr_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi >= 0) d[gi] += geo.area / 3.0;
    }
  }
  return d;
}

SparseOperator rt_mass_modified_weighted(const Triangulation& mesh,
                                         const P0Function& weights,
                                         const DofMap& rt_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    Eigen::Matrix<double, 3, 2> psi_at_center;
    for (int i = 0; i < 3; ++i)
      psi_at_center.row(i) = rt_basis(mesh, t, i, geo.barycenter);
    const double c = weights.values[t] * geo.area;
    for (int i = 0; i < 3; ++i) {
      const int gi = rt_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = rt_map.full_to_reduced[geo.sides[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj,
                              c * psi_at_center.row(i).dot(psi_at_center.row(j)));
      }
    }
  }
  return from_triplets(rt_map.size(), rt_map.size(), triplets, true);
}

SparseOperator rt_mass_modified(const Triangulation& mesh,
                                const DofMap& rt_map) {
  P0Function ones{nullptr, Eigen::VectorXd::Ones(mesh.num_elements())};
  return rt_mass_modified_weighted(mesh, ones, rt_map);
}

SparseOperator rt_mass_exact(const Triangulation& mesh, const DofMap& rt_map) {
  const TriQuadrature& rule = edge_midpoint_rule();
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const auto& geo = mesh.geometry(t);
    Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Eigen::Vector3d& l = rule.points[q];
      const Eigen::Vector2d x = l[0] * mesh.node(elem[0]) +
                                l[1] * mesh.node(elem[1]) +
                                l[2] * mesh.node(elem[2]);
      Eigen::Matrix<double, 3, 2> psi;
      for (int i = 0; i < 3; ++i) psi.row(i) = rt_basis(mesh, t, i, x);
      local += rule.weights[q] * psi * psi.transpose();
    }
    local *= geo.area;
    for (int i = 0; i < 3; ++i) {
      const int gi = rt_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = rt_map.full_to_reduced[geo.sides[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, local(i, j));
      }
    }
  }
  return from_triplets(rt_map.size(), rt_map.size(), triplets, true);
}

SparseOperator div_coupling(const Triangulation& mesh, const DofMap& rt_map,
                            const DofMap& p0_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(3 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const int gt = p0_map.full_to_reduced[t];
    if (gt < 0) continue;
    const auto& geo = mesh.geometry(t);
    for (int i = 0; i < 3; ++i) {
      const int gi = rt_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      triplets.emplace_back(
          gt, gi, geo.side_sign[i] * mesh.side(geo.sides[i]).length);
    }
  }
  return from_triplets(p0_map.size(), rt_map.size(), triplets, false);
}

SparseOperator cr_projection_pairing(const Triangulation& mesh,
                                     const DofMap& cr_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const double c = geo.area / 9.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = cr_map.full_to_reduced[geo.sides[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, c);
      }
    }
  }
  return from_triplets(cr_map.size(), cr_map.size(), triplets, true);
}

SparseOperator cr_barycenter_map(const Triangulation& mesh,
                                 const DofMap& cr_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(3 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi >= 0) triplets.emplace_back(t, gi, 1.0 / 3.0);
    }
  }
  return from_triplets(mesh.num_elements(), cr_map.size(), triplets, false);
}

SparseOperator p1_weighted_stiffness(const Triangulation& mesh,
                                     const P0Function& weights,
                                     const DofMap& p1_map) {
  if (weights.values.minCoeff() <= 0.0)
    throw std::invalid_argument("p1_weighted_stiffness: nonpositive weight");
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    const double c = weights.values[t] * mesh.geometry(t).area;
    for (int i = 0; i < 3; ++i) {
      const int gi = p1_map.full_to_reduced[elem[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = p1_map.full_to_reduced[elem[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, c * bg.row(i).dot(bg.row(j)));
      }
    }
  }
  return from_triplets(p1_map.size(), p1_map.size(), triplets, true);
}

SparseOperator p1_mass(const Triangulation& mesh, const DofMap& p1_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  // consistent mass, |T|/12 (1 + delta_ij) at this order
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const double a = mesh.geometry(t).area;
    for (int i = 0; i < 3; ++i) {
      const int gi = p1_map.full_to_reduced[elem[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = p1_map.full_to_reduced[elem[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, a / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  return from_triplets(p1_map.size(), p1_map.size(), triplets, true);
}

SparseOperator p1_projection_pairing(const Triangulation& mesh,
                                     const DofMap& p1_map) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const double c = mesh.geometry(t).area / 9.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = p1_map.full_to_reduced[elem[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = p1_map.full_to_reduced[elem[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, c);
      }
    }
  }
  return from_triplets(p1_map.size(), p1_map.size(), triplets, true);
}

Eigen::VectorXd p1_load(const Triangulation& mesh, const P0Function& f_h,
                        const DofMap& p1_map) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p1_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const double c = f_h.values[t] * mesh.geometry(t).area / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = p1_map.full_to_reduced[elem[i]];
      if (gi >= 0) b[gi] += c;
    }
  }
  return b;
}

Eigen::VectorXd p1_field_gradient_pairing(const Triangulation& mesh,
                                          const P0Field& q,
                                          const DofMap& p1_map) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p1_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    const Eigen::Vector2d qt = q.values.row(t);
    const double a = mesh.geometry(t).area;
    for (int i = 0; i < 3; ++i) {
      const int gi = p1_map.full_to_reduced[elem[i]];
      if (gi >= 0) b[gi] += a * qt.dot(bg.row(i));
    }
  }
  return b;
}

Eigen::VectorXd cr_field_gradient_pairing(const Triangulation& mesh,
                                          const P0Field& q,
                                          const DofMap& cr_map) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(cr_map.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& geo = mesh.geometry(t);
    const Eigen::Matrix<double, 3, 2> bg = barycentric_gradients(mesh, t);
    const Eigen::Vector2d qt = q.values.row(t);
    for (int i = 0; i < 3; ++i) {
      const int gi = cr_map.full_to_reduced[geo.sides[i]];
      if (gi >= 0) b[gi] += geo.area * qt.dot(-2.0 * bg.row(i));
    }
  }
  return b;
}

}  // namespace femdual
