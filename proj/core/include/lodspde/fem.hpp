#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <string_view>

#include "lodspde/coefficient.hpp"
#include "lodspde/mesh.hpp"

namespace lodspde {

using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using PointFunction = std::function<double(Point)>;

enum class Space {
  FineInterior,
  FineAll,
  CoarseInterior,
  CoarseAll,
  Multiscale,
};

std::string_view to_string(Space space);

/// Coefficients of a discrete function, tagged with the space they live in.
struct FieldVector {
  Space space = Space::FineInterior;
  Eigen::VectorXd values;

  Eigen::Index size() const noexcept { return values.size(); }
  /// Throws TagMismatch unless the vector lives in `expected`.
  const FieldVector& require(Space expected) const;
};

/// Symmetric sparse operator on the DOFs of one space.
struct SparseOperator {
  Space space = Space::FineInterior;
  SparseMatrix matrix;

  Eigen::Index dimension() const noexcept { return matrix.rows(); }
  double entry(Eigen::Index i, Eigen::Index j) const {
    return matrix.coeff(i, j);
  }
};

// -- element-level kernels -------------------------------------------------

using LocalMatrix = Eigen::Matrix3d;

/// a_T(phi_i, phi_j) for a P1 triangle with constant coefficient `value`.
LocalMatrix local_stiffness(const Mesh& mesh, ElementId element, double value);
/// Exact P1 mass: area/12 * (2 on the diagonal, 1 off).
LocalMatrix local_mass(const Mesh& mesh, ElementId element);

/// Coefficient value used on an element (the epsilon-cell of its centroid).
double element_coefficient(const Mesh& mesh, const CoefficientField& a,
                           ElementId element);

// -- assembly --------------------------------------------------------------

/// Stiffness over all vertices (boundary rows included).
SparseMatrix assemble_stiffness_full(const Mesh& mesh,
                                     const CoefficientField& a);
SparseMatrix assemble_mass_full(const Mesh& mesh);

/// Restriction of a full-vertex matrix to interior rows and columns.
SparseMatrix restrict_to_interior(const Mesh& mesh, const SparseMatrix& full);

/// Stiffness on interior DOFs. Throws InvalidArgument when the coefficient
/// grid is finer than the mesh.
SparseOperator assemble_stiffness(const Mesh& mesh, const CoefficientField& a,
                                  Space tag = Space::FineInterior);
SparseOperator assemble_mass(const Mesh& mesh,
                             Space tag = Space::FineInterior);

/// b_j = int f phi_j over interior vertices, by the 3-point edge-midpoint
/// rule on every triangle (exact for quadratics).
Eigen::VectorXd assemble_load(const Mesh& mesh, const PointFunction& f);

/// Nodal values of f at the interior vertices.
FieldVector nodal_interpolant(const Mesh& mesh, const PointFunction& f,
                              Space tag = Space::FineInterior);

/// P_h f: solves M x = b with b from assemble_load.
FieldVector l2_project_onto_fine(const Mesh& mesh, const SparseOperator& mass,
                                 const PointFunction& f);
FieldVector l2_project_onto_fine(const Mesh& mesh, const PointFunction& f);

// -- coarse/fine transfer --------------------------------------------------

/// Exact nodal evaluation of coarse P1 functions at fine vertices, and the
/// quasi-interpolation I = pi_H o Pi_H (elementwise L2 projection onto
/// P1(K_H) followed by averaging over the elements sharing a vertex).
class GridTransfer {
 public:
  explicit GridTransfer(const LevelPair& pair);

  /// Fine interior x coarse interior.
  const SparseMatrix& prolongation() const noexcept { return prolongation_; }
  /// Coarse interior x fine interior (row-major for row slicing).
  const RowSparseMatrix& interpolation() const noexcept {
    return interpolation_;
  }
  /// Coarse all-vertices x fine all-vertices (boundary rows kept).
  const RowSparseMatrix& interpolation_all() const noexcept {
    return interpolation_all_;
  }

  FieldVector prolongate(const FieldVector& coarse) const;
  FieldVector quasi_interpolate(const FieldVector& fine) const;

 private:
  SparseMatrix prolongation_;
  RowSparseMatrix interpolation_;
  RowSparseMatrix interpolation_all_;
  Eigen::Index fine_all_ = 0;
  Eigen::Index fine_interior_ = 0;
  std::vector<VertexId> coarse_interior_;
};

/// Barycentric coordinate of coarse vertex `local` of coarse element K at a
/// fine vertex, computed in exact integer arithmetic.
double coarse_barycentric(const LevelPair& pair, ElementId coarse_element,
                          int local, VertexId fine_vertex);

FieldVector prolongate(const LevelPair& pair, const FieldVector& coarse);
FieldVector quasi_interpolate(const LevelPair& pair, const FieldVector& fine);

// -- norms -----------------------------------------------------------------

/// sqrt(v^T S v) for the stiffness operator.
double energy_norm(const SparseOperator& stiffness, const FieldVector& v);
/// sqrt(v^T M v) for the mass operator.
double l2_norm(const SparseOperator& mass, const FieldVector& v);
double quadratic_form(const SparseMatrix& a, const Eigen::VectorXd& v);

}  // namespace lodspde
