#pragma once

#include <Eigen/SparseCholesky>
#include <array>
#include <memory>
#include <vector>

#include "lodspde/fem.hpp"
#include "lodspde/parallel.hpp"

namespace lodspde {

/// Localization default: ell = ceil(log2(1/H)) = p_H.
constexpr int default_localization(int coarse_exponent) noexcept {
  return coarse_exponent;
}

/// Correctors R^K_{f,ell} phi_a for the interior coarse vertices a of one
/// coarse element K, stored patch-locally.
struct ElementCorrector {
  ElementId element = -1;
  int ell = 0;
  /// Coarse elements of N^ell(K).
  std::vector<ElementId> patch;
  /// Fine interior DOFs free in the patch (sorted); the rows of `values`.
  std::vector<std::int32_t> fine_dofs;
  /// Coarse interior nodes whose quasi-interpolation value is constrained.
  std::vector<std::int32_t> constraint_nodes;
  /// Coarse interior DOF of each local vertex of K, -1 on the boundary.
  std::array<std::int32_t, 3> coarse_dofs{-1, -1, -1};
  /// Column a holds the corrector for local vertex a (zero if boundary).
  Eigen::MatrixXd values;
  /// Largest relative residual of the saddle-point solves.
  double residual = 0.0;

  /// Scatter column `local` into a fine interior vector.
  Eigen::VectorXd to_fine(int local, Eigen::Index fine_interior) const;
};

/// Precomputed data shared by all corrector problems on one level pair.
///
/// Holds references to `pair` and `a`; both must outlive this object.
class CorrectorProblem {
 public:
  CorrectorProblem(const LevelPair& pair, const CoefficientField& a);
  CorrectorProblem(const LevelPair& pair, const CoefficientField& a,
                   SparseOperator fine_stiffness);

  const LevelPair& pair() const noexcept { return pair_; }
  const GridTransfer& transfer() const noexcept { return transfer_; }
  const SparseOperator& stiffness() const noexcept { return stiffness_; }

  /// Solves the patch saddle-point problems
  ///   [S_loc C^T; C 0] [q; mu] = [r_a; 0]
  /// where r_a is the element-K part of a(phi_a, .) and C the quasi-
  /// interpolation restricted to the patch. Throws CorrectorSolveFailure.
  ElementCorrector solve(ElementId element, int ell) const;

  /// Element-K load r_a(w) = a_K(phi_a, w) on the given free fine DOFs.
  Eigen::VectorXd element_load(ElementId element, int local,
                               const std::vector<std::int32_t>& fine_dofs,
                               const std::vector<std::int32_t>& local_of) const;

  /// Ideal corrector R_f phi_i over the whole fine space (no localization).
  Eigen::VectorXd global_corrector(std::int32_t coarse_dof) const;

 private:
  const LevelPair& pair_;
  GridTransfer transfer_;
  SparseOperator stiffness_;
  std::vector<double> fine_coefficients_;
};

/// Solves [S C^T; C 0][q; mu] = [R; 0] for every column of R by a sparse
/// Cholesky of S and a dense Cholesky of the Schur complement C S^-1 C^T.
/// An empty C reduces to S q = R. Returns q; `residual` receives the largest
/// relative residual over both block equations.
Eigen::MatrixXd solve_constrained(const SparseMatrix& s, const SparseMatrix& c,
                                  const Eigen::MatrixXd& rhs,
                                  double* residual = nullptr);

ElementCorrector compute_element_corrector(const LevelPair& pair,
                                           const CoefficientField& a,
                                           const SparseOperator& fine_stiffness,
                                           ElementId element, int ell);

/// Galerkin space spanned by the columns of a fine-interior basis matrix.
///
/// For the LOD space the columns are P e_i - R_{f,ell} phi_i; the plain coarse
/// FEM space uses the prolongated hats with no correction.
class MultiscaleSpace {
 public:
  enum class Kind { Lod, CoarseFem };

  MultiscaleSpace(LevelPair pair, int ell, Kind kind, SparseMatrix prolongation,
                  SparseMatrix correctors, const SparseOperator& fine_stiffness,
                  const SparseOperator& fine_mass,
                  std::uint64_t coefficient_hash, double offline_seconds);

  /// Plain V_H with exact integration of the fine coefficient.
  static MultiscaleSpace coarse_fem(LevelPair pair,
                                    const SparseOperator& fine_stiffness,
                                    const SparseOperator& fine_mass,
                                    std::uint64_t coefficient_hash = 0);

  const LevelPair& pair() const noexcept { return pair_; }
  int coarse_exponent() const noexcept { return pair_.coarse.level_exponent(); }
  int fine_exponent() const noexcept { return pair_.fine.level_exponent(); }
  int ell() const noexcept { return ell_; }
  Kind kind() const noexcept { return kind_; }
  Space tag() const noexcept {
    return kind_ == Kind::Lod ? Space::Multiscale : Space::CoarseInterior;
  }
  Eigen::Index dimension() const noexcept { return basis_.cols(); }

  /// B = P - Q, fine interior x coarse interior.
  const SparseMatrix& basis() const noexcept { return basis_; }
  const SparseMatrix& correctors() const noexcept { return correctors_; }
  const SparseOperator& stiffness() const noexcept { return stiffness_; }
  const SparseOperator& mass() const noexcept { return mass_; }
  std::uint64_t coefficient_hash() const noexcept { return coefficient_hash_; }
  double offline_seconds() const noexcept { return offline_seconds_; }

  FieldVector to_fine(const FieldVector& coefficients) const;
  /// P^ms_ell v: solves mass() x = B^T M_h v.
  FieldVector l2_project(const FieldVector& fine,
                         const SparseOperator& fine_mass) const;
  /// Same, given the load B^T M_h v directly.
  FieldVector solve_mass(const Eigen::VectorXd& load) const;

 private:
  LevelPair pair_;
  int ell_ = 0;
  Kind kind_ = Kind::Lod;
  SparseMatrix correctors_;
  SparseMatrix basis_;
  SparseOperator stiffness_;
  SparseOperator mass_;
  std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> mass_solver_;
  std::uint64_t coefficient_hash_ = 0;
  double offline_seconds_ = 0.0;
};

/// Assembles the localized correctors for all coarse elements and the
/// resulting space. Element problems run in parallel; their contributions
/// are merged in element order, so the result does not depend on the
/// worker count.
MultiscaleSpace build_multiscale_space(const LevelPair& pair,
                                       const CoefficientField& a,
                                       const SparseOperator& fine_stiffness,
                                       const SparseOperator& fine_mass, int ell,
                                       const Parallelism& parallelism = {});

FieldVector ms_l2_project(const MultiscaleSpace& space, const FieldVector& fine,
                          const SparseOperator& fine_mass);

struct DecayEntry {
  int ell = 0;
  /// |R_f phi_i - R_{f,ell} phi_i|_1
  double energy_distance = 0.0;
};

/// Energy distance between the ideal and localized corrector of one coarse
/// interior vertex for ell = 1..ell_max.
std::vector<DecayEntry> corrector_decay_report(const LevelPair& pair,
                                               const CoefficientField& a,
                                               const SparseOperator& fine_stiffness,
                                               VertexId coarse_vertex,
                                               int ell_max);

}  // namespace lodspde
