#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace lodspde {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using VertexId = std::int32_t;
using ElementId = std::int32_t;
using Triangle = std::array<VertexId, 3>;

/// Structured triangulation of the unit square with mesh width 2^-p.
///
/// Vertices are numbered row-major by y then x, so vertex (i, j) with grid
/// coordinates (i 2^-p, j 2^-p) has id j (2^p + 1) + i. Cell (i, j) is split
/// along its lower-left to upper-right diagonal into the "lower" element
/// 2 (j 2^p + i) with vertices (LL, LR, UR) and the "upper" element
/// 2 (j 2^p + i) + 1 with vertices (LL, UR, UL). Both are counter-clockwise.
class Mesh {
 public:
  Mesh() = default;
  static Mesh uniform(int level_exponent);

  int level_exponent() const noexcept { return level_exponent_; }
  int cells_per_side() const noexcept { return 1 << level_exponent_; }
  double width() const noexcept { return 1.0 / cells_per_side(); }

  std::int32_t num_vertices() const noexcept {
    return static_cast<std::int32_t>(vertices_.size());
  }
  std::int32_t num_elements() const noexcept {
    return static_cast<std::int32_t>(elements_.size());
  }
  std::int32_t num_interior() const noexcept {
    return static_cast<std::int32_t>(interior_vertices_.size());
  }

  std::span<const Point> vertices() const noexcept { return vertices_; }
  std::span<const Triangle> elements() const noexcept { return elements_; }
  const Point& vertex(VertexId v) const { return vertices_[v]; }
  const Triangle& element(ElementId e) const { return elements_[e]; }

  /// Integer grid coordinates of a vertex (units of the mesh width).
  std::array<int, 2> grid_coordinates(VertexId v) const noexcept {
    const int n = cells_per_side() + 1;
    return {v % n, v / n};
  }
  VertexId vertex_at(int i, int j) const noexcept {
    return j * (cells_per_side() + 1) + i;
  }

  bool is_boundary(VertexId v) const { return boundary_[v]; }
  /// Contiguous interior-DOF index, or -1 for boundary vertices.
  std::int32_t interior_index(VertexId v) const { return interior_index_[v]; }
  std::span<const VertexId> interior_vertices() const noexcept {
    return interior_vertices_;
  }

  /// Elements whose closure contains the vertex, in increasing id order.
  std::span<const ElementId> incident_elements(VertexId v) const {
    return {incident_.data() + incident_offsets_[v],
            incident_.data() + incident_offsets_[v + 1]};
  }

  double signed_area(ElementId e) const;

 private:
  int level_exponent_ = 0;
  std::vector<Point> vertices_;
  std::vector<Triangle> elements_;
  std::vector<bool> boundary_;
  std::vector<std::int32_t> interior_index_;
  std::vector<VertexId> interior_vertices_;
  std::vector<std::int32_t> incident_offsets_;
  std::vector<ElementId> incident_;
};

Mesh build_uniform_mesh(int level_exponent);

/// A coarse mesh together with a dyadic refinement of it.
struct LevelPair {
  Mesh coarse;
  Mesh fine;
  /// Fine elements inside each coarse element, in increasing id order.
  std::vector<std::vector<ElementId>> element_children;
  /// Coarse element containing each fine element.
  std::vector<ElementId> element_parent;
  /// Fine vertex sitting on each coarse vertex.
  std::vector<VertexId> vertex_embedding;

  int refinement_steps() const noexcept {
    return fine.level_exponent() - coarse.level_exponent();
  }
};

LevelPair refine(const Mesh& mesh, int steps);

/// Coarse/fine pair with the given exponents (fine > coarse).
LevelPair make_level_pair(int coarse_exponent, int fine_exponent);

/// N^ell(K): ell rounds of growth by vertex adjacency, sorted by id.
std::vector<ElementId> element_patch(const Mesh& mesh, ElementId element,
                                     int ell);

/// One round of vertex-adjacency growth applied to an arbitrary element set.
std::vector<ElementId> grow_patch(const Mesh& mesh,
                                  std::span<const ElementId> elements);

}  // namespace lodspde
