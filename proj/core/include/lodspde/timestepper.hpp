#pragma once

#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lodspde/fem.hpp"
#include "lodspde/lod.hpp"
#include "lodspde/noise.hpp"

namespace lodspde {

using SpaceTimeFunction = std::function<double(Point, double)>;

/// How (Delta W, phi_j) enters the load.
enum class NoiseLoadRule {
  /// M_h times the nodal interpolant of Delta W.
  Nodal,
  /// Sine-hat inner products by high-order quadrature.
  Quadrature,
};

struct EvolutionProblem {
  double final_time = 0.5;
  int steps = 50;
  PointFunction initial;
  SpaceTimeFunction source;
  bool source_time_dependent = false;
  NoiseModel noise;
  NoiseLoadRule noise_rule = NoiseLoadRule::Nodal;

  double timestep() const noexcept { return final_time / steps; }

  /// T = 0.5, N = 50, X0 = sin(pi x) sin(pi y), f = 5; the noise model gets
  /// the matching timestep and step count.
  static EvolutionProblem standard(NoiseModel noise);

  /// Throws InvalidArgument unless the noise model matches (k, N).
  void validate() const;
};

struct TrajectoryResult {
  /// Coefficients in the solving space.
  FieldVector final_state;
  /// The same state as a fine interior function.
  FieldVector fine_state;
  std::vector<FieldVector> snapshots;
  double setup_seconds = 0.0;
  double step_seconds = 0.0;
};

/// Backward Euler on a Galerkin subspace of V_h,
///   (M + k S) c^n = M c^{n-1} + k B^T b_f(t_n) + B^T M_h w^n,
/// with one factorization of M + k S reused for every step and sample.
/// For the fine space B is the identity.
///
/// The object is immutable after construction and may be shared by
/// concurrent trajectory runs.
class Stepper {
 public:
  /// Fine FEM reference on the interior DOFs of `mesh`.
  Stepper(const EvolutionProblem& problem, const Mesh& mesh,
          const SparseOperator& fine_stiffness,
          const SparseOperator& fine_mass);
  /// LOD or coarse FEM space; `fine_mass` is M_h of the space's fine mesh.
  Stepper(const EvolutionProblem& problem, const MultiscaleSpace& space,
          const SparseOperator& fine_mass);

  const EvolutionProblem& problem() const noexcept { return problem_; }
  Space tag() const noexcept { return tag_; }
  Eigen::Index dimension() const noexcept { return dimension_; }
  Eigen::Index fine_dimension() const noexcept { return fine_dimension_; }
  int fine_exponent() const noexcept { return fine_exponent_; }
  /// B, or nullptr for the fine space.
  const SparseMatrix* basis() const noexcept {
    return has_basis_ ? &basis_ : nullptr;
  }
  /// Gram matrix of the coefficients in the fine L2 inner product.
  const SparseMatrix& gram() const noexcept { return mass_; }
  const Eigen::VectorXd& initial_coefficients() const noexcept {
    return initial_;
  }
  double setup_seconds() const noexcept { return setup_seconds_; }

  /// c^N for one noise path; nullptr means zero noise.
  Eigen::VectorXd final_coefficients(const NoisePath* path) const;
  TrajectoryResult run(const NoisePath* path, bool keep_snapshots = false) const;

  Eigen::VectorXd to_fine(const Eigen::VectorXd& coefficients) const;

 private:
  void setup(const SparseMatrix& stiffness);
  Eigen::VectorXd source_load(double t) const;
  void add_noise_load(const NoisePath& path, int step,
                      Eigen::VectorXd& rhs) const;
  void check_path(const NoisePath& path) const;
  void advance(Eigen::VectorXd& c, const NoisePath* path, int step) const;

  EvolutionProblem problem_;
  Space tag_ = Space::FineInterior;
  Eigen::Index dimension_ = 0;
  Eigen::Index fine_dimension_ = 0;
  int fine_exponent_ = 0;
  const Mesh* mesh_ = nullptr;
  bool has_basis_ = false;
  SparseMatrix basis_;
  SparseMatrix mass_;
  SparseMatrix fine_mass_;
  SparseMatrix system_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> solver_;
  Eigen::VectorXd initial_;
  Eigen::VectorXd source_cache_;
  Eigen::VectorXd sqrt_eigenvalues_;
  std::optional<ModeBasis> modes_;
  /// B^T M_h N (subspace, nodal rule) or the quadrature loads, possibly
  /// projected; empty on the fine nodal path.
  Eigen::MatrixXd noise_map_;
  double setup_seconds_ = 0.0;
};

TrajectoryResult run_fem_trajectory(const EvolutionProblem& problem,
                                    const Mesh& mesh,
                                    const SparseOperator& fine_stiffness,
                                    const SparseOperator& fine_mass,
                                    const NoisePath* path);

TrajectoryResult run_lod_trajectory(const EvolutionProblem& problem,
                                    const MultiscaleSpace& space,
                                    const SparseOperator& fine_mass,
                                    const NoisePath* path);

/// E[X] reference: the fine scheme with the noise load removed.
TrajectoryResult run_expectation_reference(const EvolutionProblem& problem,
                                           const Mesh& mesh,
                                           const SparseOperator& fine_stiffness,
                                           const SparseOperator& fine_mass);

}  // namespace lodspde
