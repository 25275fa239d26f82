#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace femdual {

/// Spatial dimension of the meshes. The variational formulas elsewhere keep
/// the dimension as a named parameter so they read like the general case.
inline constexpr int kDim = 2;

enum class SideLabel { interior, dirichlet, neumann };

/// A mesh side (edge). Sides are enumerated globally by their sorted node
/// pair; the unit normal points from t_minus into t_plus, outward for
/// boundary sides. t_minus is always the adjacent element of lower index.
struct Side {
  std::array<int, 2> nodes{-1, -1};  // sorted, nodes[0] < nodes[1]
  int t_minus = -1;
  int t_plus = -1;  // -1 for boundary sides
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  Eigen::Vector2d midpoint = Eigen::Vector2d::Zero();
  double length = 0.0;
  SideLabel label = SideLabel::interior;

  bool boundary() const { return t_plus < 0; }
};

struct ElementGeometry {
  Eigen::Vector2d barycenter = Eigen::Vector2d::Zero();
  double area = 0.0;
  // side i is opposite local vertex i; sign is +1 when this element is the
  // side's t_minus (its normal points out of the element)
  std::array<int, 3> sides{-1, -1, -1};
  std::array<double, 3> side_sign{0.0, 0.0, 0.0};
};

/// Conforming simplicial triangulation with full side topology. Immutable
/// after construction; safe to share across threads.
class Triangulation {
 public:
  Triangulation(std::vector<Eigen::Vector2d> nodes,
                std::vector<std::array<int, 3>> elements);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_sides() const { return static_cast<int>(sides_.size()); }

  const Eigen::Vector2d& node(int i) const { return nodes_[i]; }
  const std::array<int, 3>& element(int t) const { return elements_[t]; }
  const Side& side(int s) const { return sides_[s]; }
  const ElementGeometry& geometry(int t) const { return geometry_[t]; }

  const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  const std::vector<Side>& sides() const { return sides_; }

  double h_max() const { return h_max_; }
  double area() const { return total_area_; }

  /// True if some boundary side carries a Dirichlet label.
  bool has_dirichlet_boundary() const;

  /// Replaces boundary labels; interior sides are untouched. The predicate
  /// must return dirichlet or neumann for every boundary side midpoint.
  void relabel_boundary(
      const std::function<SideLabel(const Eigen::Vector2d&)>& predicate);

  /// Same, but the predicate sees the full side record.
  void relabel_boundary_sides(
      const std::function<SideLabel(const Side&)>& predicate);

 private:
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<Side> sides_;
  std::vector<ElementGeometry> geometry_;
  double h_max_ = 0.0;
  double total_area_ = 0.0;

  void build_topology();
};

using MeshPtr = std::shared_ptr<const Triangulation>;

/// Mesh of (-1,1)^2 from `level` uniform refinements of a two-triangle split,
/// all boundary sides labeled Dirichlet. Vertex count is (2^level+1)^2.
MeshPtr unit_square_mesh(int level);

/// Red refinement: every triangle is split into four congruent children by
/// connecting side midpoints; boundary labels are inherited.
MeshPtr refine_uniform(const Triangulation& mesh);

/// Copy of `mesh` with boundary sides relabeled by the predicate.
MeshPtr set_boundary_labels(
    const Triangulation& mesh,
    const std::function<SideLabel(const Eigen::Vector2d&)>& predicate);

/// Gradients of the three barycentric coordinates on element t (row i is
/// the gradient of the coordinate associated with local vertex i).
Eigen::Matrix<double, 3, 2> barycentric_gradients(const Triangulation& mesh,
                                                  int t);

/// Barycentric coordinates of a point with respect to element t.
Eigen::Vector3d barycentric_coordinates(const Triangulation& mesh, int t,
                                        const Eigen::Vector2d& x);

/// Plain-text dump: header `V E M`, then nodes `x y`, sides `n0 n1 label`
/// (0 interior, 1 Dirichlet, 2 Neumann), elements `n0 n1 n2`.
void write_mesh(std::ostream& out, const Triangulation& mesh);

}  // namespace femdual
