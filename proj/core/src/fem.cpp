#include "lodspde/fem.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include <fmt/format.h>

#include "lodspde/errors.hpp"

namespace lodspde {

std::string_view to_string(Space space) {
  switch (space) {
    case Space::FineInterior: return "fine-interior";
    case Space::FineAll: return "fine-all";
    case Space::CoarseInterior: return "coarse-interior";
    case Space::CoarseAll: return "coarse-all";
    case Space::Multiscale: return "multiscale";
  }
  return "unknown";
}

const FieldVector& FieldVector::require(Space expected) const {
  if (space != expected) {
    throw TagMismatch(fmt::format("expected a {} vector, got {}",
                                  to_string(expected), to_string(space)));
  }
  return *this;
}

LocalMatrix local_stiffness(const Mesh& mesh, ElementId element,
                            double value) {
  const auto& t = mesh.element(element);
  const Point& a = mesh.vertex(t[0]);
  const Point& b = mesh.vertex(t[1]);
  const Point& c = mesh.vertex(t[2]);
  const double area = mesh.signed_area(element);
  // Gradients of the barycentric coordinates times 2*area.
  const std::array<std::array<double, 2>, 3> g{{
      {b.y - c.y, c.x - b.x},
      {c.y - a.y, a.x - c.x},
      {a.y - b.y, b.x - a.x},
  }};
  const double scale = value / (4.0 * area);
  LocalMatrix k;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      k(i, j) = scale * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

LocalMatrix local_mass(const Mesh& mesh, ElementId element) {
  const double w = mesh.signed_area(element) / 12.0;
  LocalMatrix m;
  m.setConstant(w);
  m.diagonal().setConstant(2.0 * w);
  return m;
}

double element_coefficient(const Mesh& mesh, const CoefficientField& a,
                           ElementId element) {
  const auto& t = mesh.element(element);
  const Point& p0 = mesh.vertex(t[0]);
  const Point& p1 = mesh.vertex(t[1]);
  const Point& p2 = mesh.vertex(t[2]);
  return a.value_at({(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0});
}

namespace {

void check_alignment(const Mesh& mesh, const CoefficientField& a) {
  if (a.epsilon_exponent() > mesh.level_exponent()) {
    throw InvalidArgument(fmt::format(
        "coefficient grid 2^-{} is not resolved by mesh width 2^-{}",
        a.epsilon_exponent(), mesh.level_exponent()));
  }
}

template <typename LocalFn>
SparseMatrix assemble_full(const Mesh& mesh, LocalFn&& local) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(mesh.num_elements()));
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    const LocalMatrix k = local(e);
    const auto& t = mesh.element(e);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) triplets.emplace_back(t[i], t[j], k(i, j));
    }
  }
  SparseMatrix m(mesh.num_vertices(), mesh.num_vertices());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

SparseMatrix assemble_stiffness_full(const Mesh& mesh,
                                     const CoefficientField& a) {
  check_alignment(mesh, a);
  return assemble_full(mesh, [&](ElementId e) {
    return local_stiffness(mesh, e, element_coefficient(mesh, a, e));
  });
}

SparseMatrix assemble_mass_full(const Mesh& mesh) {
  return assemble_full(mesh, [&](ElementId e) { return local_mass(mesh, e); });
}

SparseMatrix restrict_to_interior(const Mesh& mesh, const SparseMatrix& full) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(full.nonZeros());
  for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
    const auto jc = mesh.interior_index(static_cast<VertexId>(col));
    if (jc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const auto ir = mesh.interior_index(static_cast<VertexId>(it.row()));
      if (ir >= 0) triplets.emplace_back(ir, jc, it.value());
    }
  }
  SparseMatrix m(mesh.num_interior(), mesh.num_interior());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseOperator assemble_stiffness(const Mesh& mesh, const CoefficientField& a,
                                  Space tag) {
  return {tag, restrict_to_interior(mesh, assemble_stiffness_full(mesh, a))};
}

SparseOperator assemble_mass(const Mesh& mesh, Space tag) {
  return {tag, restrict_to_interior(mesh, assemble_mass_full(mesh))};
}

Eigen::VectorXd assemble_load(const Mesh& mesh, const PointFunction& f) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.num_interior());
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.element(e);
    const double w = mesh.signed_area(e) / 6.0;
    // fm[k] is f at the midpoint of the edge opposite local vertex k.
    std::array<double, 3> fm{};
    for (int k = 0; k < 3; ++k) {
      const Point& p = mesh.vertex(t[(k + 1) % 3]);
      const Point& q = mesh.vertex(t[(k + 2) % 3]);
      fm[k] = f({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    }
    for (int i = 0; i < 3; ++i) {
      const auto row = mesh.interior_index(t[i]);
      if (row < 0) continue;
      // phi_i is 1/2 on the two edges touching vertex i, 0 on the opposite.
      b[row] += w * (fm[(i + 1) % 3] + fm[(i + 2) % 3]);
    }
  }
  return b;
}

FieldVector nodal_interpolant(const Mesh& mesh, const PointFunction& f,
                              Space tag) {
  FieldVector v{tag, Eigen::VectorXd(mesh.num_interior())};
  const auto interior = mesh.interior_vertices();
  for (std::size_t k = 0; k < interior.size(); ++k) {
    v.values[static_cast<Eigen::Index>(k)] = f(mesh.vertex(interior[k]));
  }
  return v;
}

FieldVector l2_project_onto_fine(const Mesh& mesh, const SparseOperator& mass,
                                 const PointFunction& f) {
  Eigen::SimplicialLDLT<SparseMatrix> solver(mass.matrix);
  if (solver.info() != Eigen::Success) {
    throw SolverError("mass matrix factorization failed");
  }
  const Eigen::VectorXd b = assemble_load(mesh, f);
  FieldVector x{Space::FineInterior, solver.solve(b)};
  if (solver.info() != Eigen::Success) {
    throw SolverError("mass matrix solve failed");
  }
  return x;
}

FieldVector l2_project_onto_fine(const Mesh& mesh, const PointFunction& f) {
  return l2_project_onto_fine(mesh, assemble_mass(mesh), f);
}

double coarse_barycentric(const LevelPair& pair, ElementId coarse_element,
                          int local, VertexId fine_vertex) {
  const int ratio = 1 << pair.refinement_steps();
  const auto& tri = pair.coarse.element(coarse_element);
  auto corner = [&](int k) {
    auto c = pair.coarse.grid_coordinates(tri[k]);
    return std::array<long long, 2>{c[0] * ratio, c[1] * ratio};
  };
  const auto fx = pair.fine.grid_coordinates(fine_vertex);
  const std::array<long long, 2> x{fx[0], fx[1]};
  const auto a = corner(local);
  const auto b = corner((local + 1) % 3);
  const auto c = corner((local + 2) % 3);
  auto det = [](const std::array<long long, 2>& p,
                const std::array<long long, 2>& q,
                const std::array<long long, 2>& r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
  };
  return static_cast<double>(det(x, b, c)) / static_cast<double>(det(a, b, c));
}

GridTransfer::GridTransfer(const LevelPair& pair)
    : fine_all_(pair.fine.num_vertices()),
      fine_interior_(pair.fine.num_interior()),
      coarse_interior_(pair.coarse.interior_vertices().begin(),
                       pair.coarse.interior_vertices().end()) {
  const Mesh& coarse = pair.coarse;
  const Mesh& fine = pair.fine;

  // Prolongation: each fine vertex evaluated once through any containing
  // coarse element (coarse P1 functions are continuous).
  {
    std::vector<char> visited(fine.num_vertices(), 0);
    std::vector<Eigen::Triplet<double>> triplets;
    for (ElementId k = 0; k < coarse.num_elements(); ++k) {
      for (ElementId t : pair.element_children[k]) {
        for (VertexId v : fine.element(t)) {
          if (visited[v]) continue;
          visited[v] = 1;
          const auto row = fine.interior_index(v);
          if (row < 0) continue;
          for (int a = 0; a < 3; ++a) {
            const auto col = coarse.interior_index(coarse.element(k)[a]);
            if (col < 0) continue;
            const double value = coarse_barycentric(pair, k, a, v);
            if (value != 0.0) triplets.emplace_back(row, col, value);
          }
        }
      }
    }
    prolongation_.resize(fine.num_interior(), coarse.num_interior());
    prolongation_.setFromTriplets(triplets.begin(), triplets.end());
  }

  // Quasi-interpolation over all vertices.
  {
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<VertexId> local_vertices;
    std::vector<std::array<double, 3>> coupling;
    for (ElementId k = 0; k < coarse.num_elements(); ++k) {
      local_vertices.clear();
      coupling.clear();
      auto column_of = [&](VertexId v) {
        for (std::size_t c = 0; c < local_vertices.size(); ++c) {
          if (local_vertices[c] == v) return c;
        }
        local_vertices.push_back(v);
        coupling.push_back({0.0, 0.0, 0.0});
        return local_vertices.size() - 1;
      };
      // coupling[c][a] = (lambda_a, psi_c)_K for fine hats psi_c.
      for (ElementId t : pair.element_children[k]) {
        const LocalMatrix mt = local_mass(fine, t);
        const auto& tv = fine.element(t);
        std::array<std::array<double, 3>, 3> lambda{};
        for (int i = 0; i < 3; ++i) {
          for (int a = 0; a < 3; ++a) {
            lambda[i][a] = coarse_barycentric(pair, k, a, tv[i]);
          }
        }
        for (int j = 0; j < 3; ++j) {
          const auto c = column_of(tv[j]);
          for (int a = 0; a < 3; ++a) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += lambda[i][a] * mt(i, j);
            coupling[c][a] += s;
          }
        }
      }
      // Inverse of the coarse local mass: (3/|K|) [[3,-1,-1],[-1,3,-1],...].
      const double inv_scale = 3.0 / coarse.signed_area(k);
      const auto& kv = coarse.element(k);
      for (int a = 0; a < 3; ++a) {
        const double weight =
            1.0 / static_cast<double>(coarse.incident_elements(kv[a]).size());
        for (std::size_t c = 0; c < local_vertices.size(); ++c) {
          const auto& col = coupling[c];
          const double value =
              inv_scale * (4.0 * col[a] - (col[0] + col[1] + col[2]));
          if (value != 0.0) {
            triplets.emplace_back(kv[a], local_vertices[c], weight * value);
          }
        }
      }
    }
    interpolation_all_.resize(coarse.num_vertices(), fine.num_vertices());
    interpolation_all_.setFromTriplets(triplets.begin(), triplets.end());

    std::vector<Eigen::Triplet<double>> inner;
    for (Eigen::Index row = 0; row < interpolation_all_.outerSize(); ++row) {
      const auto r = coarse.interior_index(static_cast<VertexId>(row));
      if (r < 0) continue;
      for (RowSparseMatrix::InnerIterator it(interpolation_all_, row); it;
           ++it) {
        const auto c = fine.interior_index(static_cast<VertexId>(it.col()));
        if (c >= 0) inner.emplace_back(r, c, it.value());
      }
    }
    interpolation_.resize(coarse.num_interior(), fine.num_interior());
    interpolation_.setFromTriplets(inner.begin(), inner.end());
  }
}

FieldVector GridTransfer::prolongate(const FieldVector& coarse) const {
  coarse.require(Space::CoarseInterior);
  if (coarse.size() != prolongation_.cols()) {
    throw InvalidArgument("coarse vector has wrong length");
  }
  return {Space::FineInterior, prolongation_ * coarse.values};
}

FieldVector GridTransfer::quasi_interpolate(const FieldVector& fine) const {
  if (fine.space == Space::FineInterior) {
    if (fine.size() != fine_interior_) {
      throw InvalidArgument("fine vector has wrong length");
    }
    return {Space::CoarseInterior, interpolation_ * fine.values};
  }
  if (fine.space == Space::FineAll) {
    if (fine.size() != fine_all_) {
      throw InvalidArgument("fine vector has wrong length");
    }
    // Boundary coarse nodes are dropped after averaging.
    const Eigen::VectorXd all = interpolation_all_ * fine.values;
    Eigen::VectorXd out(static_cast<Eigen::Index>(coarse_interior_.size()));
    for (std::size_t r = 0; r < coarse_interior_.size(); ++r) {
      out[static_cast<Eigen::Index>(r)] = all[coarse_interior_[r]];
    }
    return {Space::CoarseInterior, out};
  }
  throw TagMismatch(fmt::format("quasi-interpolation needs a fine vector, got {}",
                                to_string(fine.space)));
}

FieldVector prolongate(const LevelPair& pair, const FieldVector& coarse) {
  return GridTransfer(pair).prolongate(coarse);
}

FieldVector quasi_interpolate(const LevelPair& pair, const FieldVector& fine) {
  return GridTransfer(pair).quasi_interpolate(fine);
}

double quadratic_form(const SparseMatrix& a, const Eigen::VectorXd& v) {
  return v.dot(a * v);
}

namespace {
double operator_norm(const SparseOperator& op, const FieldVector& v) {
  if (v.size() != op.dimension()) {
    throw InvalidArgument(fmt::format(
        "vector length {} does not match operator dimension {}", v.size(),
        op.dimension()));
  }
  if (v.space != op.space) {
    throw TagMismatch(fmt::format("operator on {} applied to a {} vector",
                                  to_string(op.space), to_string(v.space)));
  }
  return std::sqrt(std::max(0.0, quadratic_form(op.matrix, v.values)));
}
}  // namespace

double energy_norm(const SparseOperator& stiffness, const FieldVector& v) {
  return operator_norm(stiffness, v);
}

double l2_norm(const SparseOperator& mass, const FieldVector& v) {
  return operator_norm(mass, v);
}

}  // namespace lodspde
