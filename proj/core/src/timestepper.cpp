#include "lodspde/timestepper.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "lodspde/errors.hpp"

namespace lodspde {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kResidualTolerance = 1e-10;

}  // namespace

EvolutionProblem EvolutionProblem::standard(NoiseModel noise) {
  EvolutionProblem p;
  p.initial = [](Point x) {
    return std::sin(std::numbers::pi * x.x) * std::sin(std::numbers::pi * x.y);
  };
  p.source = [](Point, double) { return 5.0; };
  noise.steps = p.steps;
  noise.timestep = p.timestep();
  p.noise = noise;
  return p;
}

void EvolutionProblem::validate() const {
  if (!(final_time > 0.0) || steps < 1) {
    throw InvalidArgument("final time and step count must be positive");
  }
  if (noise.steps != steps ||
      std::abs(noise.timestep - timestep()) > 1e-14 * timestep()) {
    throw InvalidArgument("noise model timestep does not match the problem");
  }
  noise.validate();
}

Stepper::Stepper(const EvolutionProblem& problem, const Mesh& mesh,
                 const SparseOperator& fine_stiffness,
                 const SparseOperator& fine_mass)
    : problem_(problem),
      tag_(Space::FineInterior),
      fine_exponent_(mesh.level_exponent()),
      mesh_(&mesh) {
  const auto start = Clock::now();
  problem_.validate();
  if (fine_stiffness.matrix.rows() != mesh.num_interior() ||
      fine_mass.matrix.rows() != mesh.num_interior()) {
    throw InvalidArgument("fine operators do not match the mesh");
  }
  dimension_ = fine_dimension_ = mesh.num_interior();
  mass_ = fine_mass.matrix;
  fine_mass_ = fine_mass.matrix;
  setup(fine_stiffness.matrix);
  if (problem_.noise_rule == NoiseLoadRule::Nodal) {
    modes_.emplace(mesh, problem_.noise.truncation);
  } else {
    noise_map_ = mode_loads_quadrature(mesh, problem_.noise.truncation);
  }
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver(mass_);
  initial_ = problem_.initial
                 ? Eigen::VectorXd(mass_solver.solve(
                       assemble_load(mesh, problem_.initial)))
                 : Eigen::VectorXd::Zero(dimension_);
  if (!problem_.source_time_dependent && problem_.source) {
    source_cache_ = source_load(0.0);
  }
  setup_seconds_ = seconds_since(start);
}

Stepper::Stepper(const EvolutionProblem& problem, const MultiscaleSpace& space,
                 const SparseOperator& fine_mass)
    : problem_(problem),
      tag_(space.tag()),
      fine_exponent_(space.fine_exponent()),
      mesh_(&space.pair().fine),
      has_basis_(true),
      basis_(space.basis()) {
  const auto start = Clock::now();
  problem_.validate();
  dimension_ = space.dimension();
  fine_dimension_ = basis_.rows();
  if (fine_mass.matrix.rows() != fine_dimension_) {
    throw InvalidArgument("fine mass does not match the space");
  }
  mass_ = space.mass().matrix;
  fine_mass_ = fine_mass.matrix;
  setup(space.stiffness().matrix);
  const Mesh& mesh = *mesh_;
  const SparseMatrix bt_m = SparseMatrix(basis_.transpose()) * fine_mass_;
  if (problem_.noise_rule == NoiseLoadRule::Nodal) {
    noise_map_ = bt_m * ModeBasis(mesh, problem_.noise.truncation).nodal_matrix();
  } else {
    noise_map_ = SparseMatrix(basis_.transpose()) *
                 mode_loads_quadrature(mesh, problem_.noise.truncation);
  }
  if (problem_.initial) {
    initial_ = space.solve_mass(basis_.transpose() *
                                assemble_load(mesh, problem_.initial))
                   .values;
  } else {
    initial_ = Eigen::VectorXd::Zero(dimension_);
  }
  if (!problem_.source_time_dependent && problem_.source) {
    source_cache_ = source_load(0.0);
  }
  setup_seconds_ = seconds_since(start);
}

void Stepper::setup(const SparseMatrix& stiffness) {
  system_ = mass_ + problem_.timestep() * stiffness;
  solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(system_);
  if (solver_->info() != Eigen::Success) {
    throw SolverError("factorization of M + k S failed");
  }
  const int kappa = problem_.noise.truncation;
  sqrt_eigenvalues_.resize(static_cast<Eigen::Index>(kappa) * kappa);
  for (int m = 1; m <= kappa; ++m) {
    for (int n = 1; n <= kappa; ++n) {
      sqrt_eigenvalues_[(m - 1) * kappa + (n - 1)] =
          std::sqrt(problem_.noise.eigenvalue(m, n));
    }
  }
}

Eigen::VectorXd Stepper::source_load(double t) const {
  const SpaceTimeFunction& f = problem_.source;
  Eigen::VectorXd b = assemble_load(*mesh_, [&f, t](Point x) { return f(x, t); });
  if (has_basis_) return basis_.transpose() * b;
  return b;
}

void Stepper::check_path(const NoisePath& path) const {
  if (path.steps() != problem_.steps ||
      path.truncation() != problem_.noise.truncation) {
    throw InvalidArgument("noise path does not match the noise model");
  }
}

void Stepper::add_noise_load(const NoisePath& path, int step,
                             Eigen::VectorXd& rhs) const {
  const auto incr = path.step(step);
  const Eigen::Map<const Eigen::VectorXd> raw(
      incr.data(), static_cast<Eigen::Index>(incr.size()));
  const Eigen::VectorXd xi = sqrt_eigenvalues_.cwiseProduct(raw);
  if (noise_map_.size() > 0) {
    rhs.noalias() += noise_map_ * xi;
    return;
  }
  const int kappa = path.truncation();
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> c(xi.data(), kappa, kappa);
  rhs.noalias() += fine_mass_ * modes_->evaluate(c);
}

void Stepper::advance(Eigen::VectorXd& c, const NoisePath* path,
                      int step) const {
  const double k = problem_.timestep();
  Eigen::VectorXd rhs = mass_ * c;
  if (problem_.source) {
    if (problem_.source_time_dependent) {
      rhs += k * source_load(step * k);
    } else {
      rhs += k * source_cache_;
    }
  }
  if (path != nullptr) add_noise_load(*path, step, rhs);
  c = solver_->solve(rhs);
  if (solver_->info() != Eigen::Success) {
    throw SolverError("backward Euler solve failed");
  }
  const double scale = rhs.norm();
  if (scale > 0.0) {
    const double residual = (system_ * c - rhs).norm() / scale;
    if (!(residual <= kResidualTolerance)) {
      throw SolverError("backward Euler residual above tolerance");
    }
  }
}

Eigen::VectorXd Stepper::final_coefficients(const NoisePath* path) const {
  if (path != nullptr) check_path(*path);
  Eigen::VectorXd c = initial_;
  for (int n = 1; n <= problem_.steps; ++n) advance(c, path, n);
  return c;
}

TrajectoryResult Stepper::run(const NoisePath* path,
                              bool keep_snapshots) const {
  if (path != nullptr) check_path(*path);
  TrajectoryResult result;
  result.setup_seconds = setup_seconds_;
  const auto start = Clock::now();
  Eigen::VectorXd c = initial_;
  if (keep_snapshots) result.snapshots.push_back({tag_, c});
  for (int n = 1; n <= problem_.steps; ++n) {
    advance(c, path, n);
    if (keep_snapshots) result.snapshots.push_back({tag_, c});
  }
  result.step_seconds = seconds_since(start);
  result.fine_state = {Space::FineInterior, to_fine(c)};
  result.final_state = {tag_, std::move(c)};
  return result;
}

Eigen::VectorXd Stepper::to_fine(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != dimension_) {
    throw InvalidArgument("coefficient vector has the wrong dimension");
  }
  if (has_basis_) return basis_ * coefficients;
  return coefficients;
}

TrajectoryResult run_fem_trajectory(const EvolutionProblem& problem,
                                    const Mesh& mesh,
                                    const SparseOperator& fine_stiffness,
                                    const SparseOperator& fine_mass,
                                    const NoisePath* path) {
  return Stepper(problem, mesh, fine_stiffness, fine_mass).run(path);
}

TrajectoryResult run_lod_trajectory(const EvolutionProblem& problem,
                                    const MultiscaleSpace& space,
                                    const SparseOperator& fine_mass,
                                    const NoisePath* path) {
  return Stepper(problem, space, fine_mass).run(path);
}

TrajectoryResult run_expectation_reference(const EvolutionProblem& problem,
                                           const Mesh& mesh,
                                           const SparseOperator& fine_stiffness,
                                           const SparseOperator& fine_mass) {
  return run_fem_trajectory(problem, mesh, fine_stiffness, fine_mass, nullptr);
}

}  // namespace lodspde
