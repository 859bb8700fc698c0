#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lodspde/errors.hpp"
#include "lodspde/mesh.hpp"

using namespace lodspde;

namespace {

// Brute-force N(S): every element sharing a vertex with some element of S.
std::set<ElementId> brute_neighbors(const Mesh& mesh,
                                    const std::set<ElementId>& s) {
  std::set<VertexId> verts;
  for (ElementId e : s) {
    for (VertexId v : mesh.element(e)) verts.insert(v);
  }
  std::set<ElementId> out;
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    for (VertexId v : mesh.element(e)) {
      if (verts.count(v)) {
        out.insert(e);
        break;
      }
    }
  }
  return out;
}

std::vector<std::pair<double, double>> sorted_coordinates(const Mesh& mesh) {
  std::vector<std::pair<double, double>> c;
  for (const Point& p : mesh.vertices()) c.emplace_back(p.x, p.y);
  std::sort(c.begin(), c.end());
  return c;
}

}  // namespace

TEST(Mesh, CountsAtP1) {
  const Mesh m = build_uniform_mesh(1);
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(m.num_elements(), 8);
  EXPECT_EQ(m.num_interior(), 1);
}

TEST(Mesh, CountsAtP3) {
  const Mesh m = build_uniform_mesh(3);
  EXPECT_EQ(m.num_elements(), 128);
  EXPECT_EQ(m.num_interior(), 49);
}

TEST(Mesh, AreaSumsToOne) {
  const Mesh m = build_uniform_mesh(2);
  double total = 0.0;
  for (ElementId e = 0; e < m.num_elements(); ++e) total += m.signed_area(e);
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Mesh, OrientationAndCoordinates) {
  for (int p = 1; p <= 5; ++p) {
    const Mesh m = build_uniform_mesh(p);
    const int n = 1 << p;
    for (ElementId e = 0; e < m.num_elements(); ++e) {
      EXPECT_GT(m.signed_area(e), 0.0);
    }
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const Point& q = m.vertex(m.vertex_at(i, j));
        EXPECT_EQ(q.x, i / double(n));
        EXPECT_EQ(q.y, j / double(n));
      }
    }
  }
}

TEST(Mesh, InteriorIndexIsContiguous) {
  const Mesh m = build_uniform_mesh(4);
  std::vector<int> seen(m.num_interior(), 0);
  for (VertexId v = 0; v < m.num_vertices(); ++v) {
    const auto [i, j] = m.grid_coordinates(v);
    const bool boundary = i == 0 || j == 0 || i == 16 || j == 16;
    EXPECT_EQ(m.is_boundary(v), boundary);
    if (boundary) {
      EXPECT_EQ(m.interior_index(v), -1);
    } else {
      ++seen.at(m.interior_index(v));
    }
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Mesh, RejectsBadExponent) {
  EXPECT_THROW(build_uniform_mesh(0), InvalidArgument);
  EXPECT_THROW(build_uniform_mesh(-3), InvalidArgument);
}

TEST(Refine, ChildrenCounts) {
  const LevelPair pair = refine(build_uniform_mesh(1), 1);
  for (const auto& c : pair.element_children) EXPECT_EQ(c.size(), 4u);
  const LevelPair big = refine(build_uniform_mesh(2), 3);
  EXPECT_EQ(big.fine.num_elements(), 2048);
  EXPECT_EQ(big.refinement_steps(), 3);
}

TEST(Refine, ChildrenPartitionFineElements) {
  const LevelPair pair = make_level_pair(2, 5);
  std::vector<int> owner(pair.fine.num_elements(), 0);
  for (ElementId k = 0; k < pair.coarse.num_elements(); ++k) {
    EXPECT_EQ(pair.element_children[k].size(), 64u);
    for (ElementId f : pair.element_children[k]) {
      ++owner[f];
      EXPECT_EQ(pair.element_parent[f], k);
    }
  }
  for (int o : owner) EXPECT_EQ(o, 1);
}

TEST(Refine, FineElementsLieInsideParent) {
  const LevelPair pair = make_level_pair(1, 3);
  for (ElementId f = 0; f < pair.fine.num_elements(); ++f) {
    const auto& tc = pair.coarse.element(pair.element_parent[f]);
    Point c{0, 0};
    for (VertexId v : pair.fine.element(f)) {
      c.x += pair.fine.vertex(v).x / 3;
      c.y += pair.fine.vertex(v).y / 3;
    }
    // Centroid inside the coarse triangle: all barycentric coordinates > 0.
    const Point& a = pair.coarse.vertex(tc[0]);
    const Point& b = pair.coarse.vertex(tc[1]);
    const Point& d = pair.coarse.vertex(tc[2]);
    auto cross = [](Point p, Point q, Point r) {
      return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    };
    EXPECT_GT(cross(a, b, c), 0.0);
    EXPECT_GT(cross(b, d, c), 0.0);
    EXPECT_GT(cross(d, a, c), 0.0);
  }
}

TEST(Refine, EmbeddingPreservesCoordinates) {
  const LevelPair pair = make_level_pair(2, 4);
  for (VertexId v = 0; v < pair.coarse.num_vertices(); ++v) {
    const Point& c = pair.coarse.vertex(v);
    const Point& f = pair.fine.vertex(pair.vertex_embedding[v]);
    EXPECT_EQ(c.x, f.x);
    EXPECT_EQ(c.y, f.y);
  }
}

TEST(Refine, TwiceByOneEqualsOnceByTwo) {
  const Mesh base = build_uniform_mesh(2);
  const LevelPair one = refine(base, 1);
  const LevelPair two = refine(one.fine, 1);
  const LevelPair direct = refine(base, 2);
  EXPECT_EQ(sorted_coordinates(two.fine), sorted_coordinates(direct.fine));
}

TEST(Refine, RejectsZeroSteps) {
  EXPECT_THROW(refine(build_uniform_mesh(2), 0), InvalidArgument);
}

TEST(Patch, SaturatesToWholeMesh) {
  const Mesh m = build_uniform_mesh(3);
  const ElementId interior = 2 * (3 * 8 + 3);
  EXPECT_EQ(element_patch(m, interior, 8).size(), 128u);
  EXPECT_EQ(element_patch(m, interior, 20).size(), 128u);
}

TEST(Patch, CornerSmallerThanInterior) {
  const Mesh m = build_uniform_mesh(3);
  const auto corner = element_patch(m, 0, 1);
  const auto interior = element_patch(m, 2 * (3 * 8 + 3), 1);
  EXPECT_LT(corner.size(), interior.size());

  const std::set<ElementId> oracle = brute_neighbors(m, {0});
  EXPECT_EQ(std::set<ElementId>(corner.begin(), corner.end()), oracle);
}

TEST(Patch, MatchesBruteForceAndRecursion) {
  const Mesh m = build_uniform_mesh(3);
  for (ElementId k = 0; k < m.num_elements(); k += 7) {
    std::set<ElementId> s{k};
    for (int ell = 1; ell <= 4; ++ell) {
      s = brute_neighbors(m, s);
      const auto got = element_patch(m, k, ell);
      EXPECT_EQ(std::set<ElementId>(got.begin(), got.end()), s)
          << "K=" << k << " ell=" << ell;
    }
    // N^2(K) = union of N^1(K') over K' in N^1(K).
    std::set<ElementId> uni;
    for (ElementId kp : element_patch(m, k, 1)) {
      const auto p = element_patch(m, kp, 1);
      uni.insert(p.begin(), p.end());
    }
    const auto two = element_patch(m, k, 2);
    EXPECT_EQ(std::set<ElementId>(two.begin(), two.end()), uni);
  }
}

TEST(Patch, MonotoneAndSymmetric) {
  const Mesh m = build_uniform_mesh(3);
  for (ElementId k = 0; k < m.num_elements(); ++k) {
    const auto n1 = element_patch(m, k, 1);
    const auto n2 = element_patch(m, k, 2);
    EXPECT_TRUE(std::includes(n2.begin(), n2.end(), n1.begin(), n1.end()));
    EXPECT_TRUE(std::is_sorted(n1.begin(), n1.end()));
    for (ElementId kp : n1) {
      const auto back = element_patch(m, kp, 1);
      EXPECT_TRUE(std::binary_search(back.begin(), back.end(), k));
    }
  }
}

TEST(Patch, RejectsBadArguments) {
  const Mesh m = build_uniform_mesh(2);
  EXPECT_THROW(element_patch(m, 0, 0), InvalidArgument);
  EXPECT_THROW(element_patch(m, -1, 1), InvalidArgument);
  EXPECT_THROW(element_patch(m, m.num_elements(), 1), InvalidArgument);
}
