#include "femdual/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace femdual {

namespace {

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                   const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

}  // namespace

Triangulation::Triangulation(std::vector<Eigen::Vector2d> nodes,
                             std::vector<std::array<int, 3>> elements)
    : nodes_(std::move(nodes)), elements_(std::move(elements)) {
  build_topology();
}

void Triangulation::build_topology() {
  const int num_elems = static_cast<int>(elements_.size());
  geometry_.resize(num_elems);
  total_area_ = 0.0;
  h_max_ = 0.0;

  // Global side enumeration by sorted node pair.
  std::vector<std::array<int, 2>> pairs;
  pairs.reserve(3 * elements_.size());
  for (const auto& elem : elements_) {
    for (int i = 0; i < 3; ++i) {
      int a = elem[(i + 1) % 3];
      int b = elem[(i + 2) % 3];
      if (a > b) std::swap(a, b);
      pairs.push_back({a, b});
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  sides_.assign(pairs.size(), Side{});
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    Side& side = sides_[s];
    side.nodes = pairs[s];
    const Eigen::Vector2d& p0 = nodes_[side.nodes[0]];
    const Eigen::Vector2d& p1 = nodes_[side.nodes[1]];
    side.midpoint = 0.5 * (p0 + p1);
    side.length = (p1 - p0).norm();
    if (side.length <= 0.0)
      throw std::invalid_argument("Triangulation: degenerate side");
  }

  const auto side_index = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    const std::array<int, 2> key{a, b};
    const auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
    return static_cast<int>(it - pairs.begin());
  };

  for (int t = 0; t < num_elems; ++t) {
    const auto& elem = elements_[t];
    ElementGeometry& geo = geometry_[t];
    const Eigen::Vector2d& v0 = nodes_[elem[0]];
    const Eigen::Vector2d& v1 = nodes_[elem[1]];
    const Eigen::Vector2d& v2 = nodes_[elem[2]];
    geo.area = signed_area(v0, v1, v2);
    if (geo.area <= 0.0)
      throw std::invalid_argument(
          "Triangulation: element not counterclockwise or degenerate");
    geo.barycenter = (v0 + v1 + v2) / 3.0;
    total_area_ += geo.area;
    h_max_ = std::max({h_max_, (v1 - v0).norm(), (v2 - v1).norm(),
                       (v0 - v2).norm()});
    for (int i = 0; i < 3; ++i) {
      const int s = side_index(elem[(i + 1) % 3], elem[(i + 2) % 3]);
      geo.sides[i] = s;
      Side& side = sides_[s];
      if (side.t_minus < 0) {
        side.t_minus = t;
      } else if (side.t_plus < 0) {
        side.t_plus = t;
      } else {
        throw std::invalid_argument(
            "Triangulation: side adjacent to more than two elements");
      }
    }
  }

  for (Side& side : sides_) {
    // t_minus is the lower element index; normals point out of t_minus.
    if (side.t_plus >= 0 && side.t_plus < side.t_minus)
      std::swap(side.t_minus, side.t_plus);
    const Eigen::Vector2d tangent =
        nodes_[side.nodes[1]] - nodes_[side.nodes[0]];
    Eigen::Vector2d normal(tangent.y(), -tangent.x());
    normal.normalize();
    const Eigen::Vector2d to_minus =
        geometry_[side.t_minus].barycenter - side.midpoint;
    if (normal.dot(to_minus) > 0.0) normal = -normal;
    side.normal = normal;
    if (side.boundary() && side.label == SideLabel::interior)
      side.label = SideLabel::dirichlet;
  }

  // Record signed incidence now that normals are fixed.
  for (int t = 0; t < num_elems; ++t) {
    ElementGeometry& geo = geometry_[t];
    for (int i = 0; i < 3; ++i)
      geo.side_sign[i] = (sides_[geo.sides[i]].t_minus == t) ? 1.0 : -1.0;
  }
}

bool Triangulation::has_dirichlet_boundary() const {
  for (const Side& s : sides_)
    if (s.boundary() && s.label == SideLabel::dirichlet) return true;
  return false;
}

void Triangulation::relabel_boundary(
    const std::function<SideLabel(const Eigen::Vector2d&)>& predicate) {
  relabel_boundary_sides(
      [&](const Side& s) { return predicate(s.midpoint); });
}

void Triangulation::relabel_boundary_sides(
    const std::function<SideLabel(const Side&)>& predicate) {
  for (Side& s : sides_) {
    if (!s.boundary()) continue;
    const SideLabel label = predicate(s);
    if (label == SideLabel::interior)
      throw std::invalid_argument(
          "relabel_boundary: predicate must return dirichlet or neumann");
    s.label = label;
  }
}

MeshPtr unit_square_mesh(int level) {
  if (level < 0) throw std::invalid_argument("unit_square_mesh: level < 0");
  if (level > 12)
    throw std::length_error("unit_square_mesh: level exceeds resource guard");
  std::vector<Eigen::Vector2d> nodes = {
      {-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
  std::vector<std::array<int, 3>> elements = {{0, 1, 2}, {0, 2, 3}};
  MeshPtr mesh = std::make_shared<Triangulation>(std::move(nodes),
                                                 std::move(elements));
  for (int l = 0; l < level; ++l) mesh = refine_uniform(*mesh);
  return mesh;
}

MeshPtr refine_uniform(const Triangulation& mesh) {
  std::vector<Eigen::Vector2d> nodes = mesh.nodes();
  const int old_num_nodes = mesh.num_nodes();
  // One new node per old side, appended in side order.
  std::vector<int> midnode(mesh.num_sides());
  for (int s = 0; s < mesh.num_sides(); ++s) {
    midnode[s] = old_num_nodes + s;
    nodes.push_back(mesh.side(s).midpoint);
  }

  std::vector<std::array<int, 3>> elements;
  elements.reserve(4 * mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& elem = mesh.element(t);
    const auto& geo = mesh.geometry(t);
    const int m0 = midnode[geo.sides[0]];
    const int m1 = midnode[geo.sides[1]];
    const int m2 = midnode[geo.sides[2]];
    elements.push_back({elem[0], m2, m1});
    elements.push_back({elem[1], m0, m2});
    elements.push_back({elem[2], m1, m0});
    elements.push_back({m0, m1, m2});
  }

  auto refined = std::make_shared<Triangulation>(std::move(nodes),
                                                 std::move(elements));

  // Inherit boundary labels: each child boundary side joins a parent vertex
  // with the midpoint node of its parent boundary side.
  std::map<int, SideLabel> parent_label;  // keyed by midpoint node id
  for (int s = 0; s < mesh.num_sides(); ++s)
    if (mesh.side(s).boundary()) parent_label[midnode[s]] = mesh.side(s).label;
  refined->relabel_boundary_sides([&](const Side& side) {
    auto it = parent_label.find(side.nodes[0]);
    if (it == parent_label.end()) it = parent_label.find(side.nodes[1]);
    if (it == parent_label.end())
      throw std::runtime_error("refine_uniform: unmatched boundary side");
    return it->second;
  });
  return refined;
}

MeshPtr set_boundary_labels(
    const Triangulation& mesh,
    const std::function<SideLabel(const Eigen::Vector2d&)>& predicate) {
  auto copy = std::make_shared<Triangulation>(mesh.nodes(), mesh.elements());
  copy->relabel_boundary(predicate);
  return copy;
}

Eigen::Matrix<double, 3, 2> barycentric_gradients(const Triangulation& mesh,
                                                  int t) {
  const auto& elem = mesh.element(t);
  const double inv_two_area = 0.5 / mesh.geometry(t).area;
  Eigen::Matrix<double, 3, 2> grads;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d e =
        mesh.node(elem[(i + 2) % 3]) - mesh.node(elem[(i + 1) % 3]);
    grads.row(i) = inv_two_area * Eigen::Vector2d(-e.y(), e.x());
  }
  return grads;
}

Eigen::Vector3d barycentric_coordinates(const Triangulation& mesh, int t,
                                        const Eigen::Vector2d& x) {
  const auto& elem = mesh.element(t);
  const double area = mesh.geometry(t).area;
  Eigen::Vector3d lambda;
  for (int i = 0; i < 3; ++i) {
    lambda[i] = signed_area(mesh.node(elem[(i + 1) % 3]),
                            mesh.node(elem[(i + 2) % 3]), x) /
                area;
  }
  return lambda;
}

void write_mesh(std::ostream& out, const Triangulation& mesh) {
  char buf[128];
  out << mesh.num_nodes() << ' ' << mesh.num_sides() << ' '
      << mesh.num_elements() << '\n';
  for (const auto& p : mesh.nodes()) {
    std::snprintf(buf, sizeof(buf), "%.16g %.16g", p.x(), p.y());
    out << buf << '\n';
  }
  for (const Side& s : mesh.sides()) {
    int label = 0;
    if (s.boundary())
      label = (s.label == SideLabel::dirichlet) ? 1 : 2;
    out << s.nodes[0] << ' ' << s.nodes[1] << ' ' << label << '\n';
  }
  for (const auto& e : mesh.elements())
    out << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
}

}  // namespace femdual
