#include "lodspde/mesh.hpp"

#include <algorithm>

#include "lodspde/errors.hpp"

namespace lodspde {

Mesh Mesh::uniform(int level_exponent) {
  if (level_exponent < 1 || level_exponent > 14) {
    throw InvalidArgument("mesh level exponent must lie in [1, 14], got " +
                          std::to_string(level_exponent));
  }
  Mesh mesh;
  mesh.level_exponent_ = level_exponent;
  const int n = 1 << level_exponent;
  const double h = 1.0 / n;

  mesh.vertices_.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  mesh.boundary_.reserve(mesh.vertices_.capacity());
  mesh.interior_index_.reserve(mesh.vertices_.capacity());
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh.vertices_.push_back({i * h, j * h});
      const bool boundary = i == 0 || j == 0 || i == n || j == n;
      mesh.boundary_.push_back(boundary);
      if (boundary) {
        mesh.interior_index_.push_back(-1);
      } else {
        mesh.interior_index_.push_back(
            static_cast<std::int32_t>(mesh.interior_vertices_.size()));
        mesh.interior_vertices_.push_back(mesh.vertex_at(i, j));
      }
    }
  }

  mesh.elements_.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const VertexId ll = mesh.vertex_at(i, j);
      const VertexId lr = mesh.vertex_at(i + 1, j);
      const VertexId ur = mesh.vertex_at(i + 1, j + 1);
      const VertexId ul = mesh.vertex_at(i, j + 1);
      mesh.elements_.push_back({ll, lr, ur});
      mesh.elements_.push_back({ll, ur, ul});
    }
  }

  // Vertex -> incident elements in CSR form; element ids come out sorted
  // because elements are visited in increasing order.
  const auto nv = mesh.vertices_.size();
  mesh.incident_offsets_.assign(nv + 1, 0);
  for (const auto& tri : mesh.elements_) {
    for (VertexId v : tri) ++mesh.incident_offsets_[v + 1];
  }
  for (std::size_t v = 0; v < nv; ++v) {
    mesh.incident_offsets_[v + 1] += mesh.incident_offsets_[v];
  }
  mesh.incident_.resize(mesh.incident_offsets_.back());
  std::vector<std::int32_t> cursor(mesh.incident_offsets_.begin(),
                                   mesh.incident_offsets_.end() - 1);
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    for (VertexId v : mesh.elements_[e]) mesh.incident_[cursor[v]++] = e;
  }
  return mesh;
}

double Mesh::signed_area(ElementId e) const {
  const auto& t = elements_[e];
  const Point& a = vertices_[t[0]];
  const Point& b = vertices_[t[1]];
  const Point& c = vertices_[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh build_uniform_mesh(int level_exponent) {
  return Mesh::uniform(level_exponent);
}

LevelPair refine(const Mesh& mesh, int steps) {
  if (steps < 1) {
    throw InvalidArgument("refinement steps must be >= 1, got " +
                          std::to_string(steps));
  }
  LevelPair pair;
  pair.coarse = mesh;
  pair.fine = Mesh::uniform(mesh.level_exponent() + steps);

  const int ratio = 1 << steps;
  const int nf = pair.fine.cells_per_side();
  const int nc = mesh.cells_per_side();

  pair.element_parent.resize(pair.fine.num_elements());
  pair.element_children.assign(mesh.num_elements(), {});
  for (int J = 0; J < nf; ++J) {
    for (int I = 0; I < nf; ++I) {
      const int ci = I / ratio;
      const int cj = J / ratio;
      const int li = I - ci * ratio;
      const int lj = J - cj * ratio;
      const ElementId coarse_cell = 2 * (cj * nc + ci);
      for (int upper = 0; upper < 2; ++upper) {
        // 3x the centroid in local fine units: lower (li+2/3, lj+1/3),
        // upper (li+1/3, lj+2/3). Below the coarse diagonal iff u > v.
        const int u3 = 3 * li + (upper ? 1 : 2);
        const int v3 = 3 * lj + (upper ? 2 : 1);
        const ElementId parent = coarse_cell + (u3 > v3 ? 0 : 1);
        pair.element_parent[2 * (J * nf + I) + upper] = parent;
      }
    }
  }
  for (ElementId e = 0; e < pair.fine.num_elements(); ++e) {
    pair.element_children[pair.element_parent[e]].push_back(e);
  }

  pair.vertex_embedding.resize(mesh.num_vertices());
  for (VertexId v = 0; v < mesh.num_vertices(); ++v) {
    const auto [i, j] = mesh.grid_coordinates(v);
    pair.vertex_embedding[v] = pair.fine.vertex_at(i * ratio, j * ratio);
  }
  return pair;
}

LevelPair make_level_pair(int coarse_exponent, int fine_exponent) {
  if (fine_exponent <= coarse_exponent) {
    throw InvalidArgument("fine exponent must exceed coarse exponent");
  }
  return refine(Mesh::uniform(coarse_exponent),
                fine_exponent - coarse_exponent);
}

std::vector<ElementId> grow_patch(const Mesh& mesh,
                                  std::span<const ElementId> elements) {
  std::vector<char> in_patch(mesh.num_elements(), 0);
  for (ElementId e : elements) in_patch[e] = 1;
  std::vector<char> seen_vertex(mesh.num_vertices(), 0);
  for (ElementId e : elements) {
    for (VertexId v : mesh.element(e)) {
      if (seen_vertex[v]) continue;
      seen_vertex[v] = 1;
      for (ElementId n : mesh.incident_elements(v)) in_patch[n] = 1;
    }
  }
  std::vector<ElementId> out;
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    if (in_patch[e]) out.push_back(e);
  }
  return out;
}

std::vector<ElementId> element_patch(const Mesh& mesh, ElementId element,
                                     int ell) {
  if (ell < 1) {
    throw InvalidArgument("patch layer count must be >= 1, got " +
                          std::to_string(ell));
  }
  if (element < 0 || element >= mesh.num_elements()) {
    throw InvalidArgument("element id out of range: " +
                          std::to_string(element));
  }
  std::vector<ElementId> patch{element};
  for (int layer = 0; layer < ell; ++layer) {
    auto next = grow_patch(mesh, patch);
    if (next.size() == patch.size()) break;  // saturated
    patch = std::move(next);
  }
  return patch;
}

}  // namespace lodspde
