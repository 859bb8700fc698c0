#include "lodspde/lod.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>

#include <fmt/format.h>

#include "lodspde/errors.hpp"

namespace lodspde {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr std::size_t kElementBlock = 64;

double relative(double num, double den) { return den > 0.0 ? num / den : num; }

}  // namespace

Eigen::MatrixXd solve_constrained(const SparseMatrix& s, const SparseMatrix& c,
                                  const Eigen::MatrixXd& rhs,
                                  double* residual_out) {
  Eigen::SimplicialLLT<SparseMatrix> chol(s);
  if (chol.info() != Eigen::Success) {
    throw SolverError("patch stiffness is not positive definite");
  }
  const bool constrained = c.rows() > 0;

  Eigen::MatrixXd y;    // S^-1 C^T
  Eigen::LLT<Eigen::MatrixXd> schur;
  if (constrained) {
    y = chol.solve(Eigen::MatrixXd(c.transpose()));
    const Eigen::MatrixXd sc = c * y;
    schur.compute(0.5 * (sc + sc.transpose()));
    if (schur.info() != Eigen::Success) {
      throw SolverError("Schur complement of the constraint block is singular");
    }
  }

  // Block solve for [S C^T; C 0][q; mu] = [r1; r2].
  auto kkt = [&](const Eigen::MatrixXd& r1, const Eigen::MatrixXd* r2,
                 Eigen::MatrixXd& q, Eigen::MatrixXd& mu) {
    Eigen::MatrixXd yr = chol.solve(r1);
    if (!constrained) {
      q = std::move(yr);
      mu.resize(0, r1.cols());
      return;
    }
    Eigen::MatrixXd t = c * yr;
    if (r2 != nullptr) t -= *r2;
    mu = schur.solve(t);
    q = yr - y * mu;
  };

  Eigen::MatrixXd q;
  Eigen::MatrixXd mu;
  kkt(rhs, nullptr, q, mu);

  auto residuals = [&](Eigen::MatrixXd& r1, Eigen::MatrixXd& r2) {
    r1 = rhs - s * q;
    if (constrained) {
      r1 -= c.transpose() * mu;
      r2 = -(c * q);
    } else {
      r2.resize(0, rhs.cols());
    }
    const double scale = std::max(rhs.norm(), 1e-300);
    const double primal = relative(r1.norm(), scale);
    const double dual =
        constrained ? relative(r2.norm(), std::max(q.norm(), 1e-300)) : 0.0;
    return std::max(primal, dual);
  };

  Eigen::MatrixXd r1;
  Eigen::MatrixXd r2;
  double res = rhs.norm() == 0.0 ? 0.0 : residuals(r1, r2);
  for (int pass = 0; pass < 2 && res > 1e-13; ++pass) {
    Eigen::MatrixXd dq;
    Eigen::MatrixXd dmu;
    kkt(r1, constrained ? &r2 : nullptr, dq, dmu);
    q += dq;
    if (constrained) mu += dmu;
    res = residuals(r1, r2);
  }
  if (residual_out != nullptr) *residual_out = res;
  return q;
}

Eigen::VectorXd ElementCorrector::to_fine(int local,
                                          Eigen::Index fine_interior) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(fine_interior);
  if (coarse_dofs[local] < 0) return out;
  for (std::size_t k = 0; k < fine_dofs.size(); ++k) {
    out[fine_dofs[k]] = values(static_cast<Eigen::Index>(k), local);
  }
  return out;
}

CorrectorProblem::CorrectorProblem(const LevelPair& pair,
                                   const CoefficientField& a)
    : CorrectorProblem(pair, a, assemble_stiffness(pair.fine, a)) {}

CorrectorProblem::CorrectorProblem(const LevelPair& pair,
                                   const CoefficientField& a,
                                   SparseOperator fine_stiffness)
    : pair_(pair), transfer_(pair), stiffness_(std::move(fine_stiffness)) {
  if (stiffness_.dimension() != pair.fine.num_interior()) {
    throw InvalidArgument("fine stiffness does not match the fine mesh");
  }
  fine_coefficients_.resize(pair.fine.num_elements());
  for (ElementId e = 0; e < pair.fine.num_elements(); ++e) {
    fine_coefficients_[e] = element_coefficient(pair.fine, a, e);
  }
}

Eigen::VectorXd CorrectorProblem::element_load(
    ElementId element, int local, const std::vector<std::int32_t>& fine_dofs,
    const std::vector<std::int32_t>& local_of) const {
  const Mesh& fine = pair_.fine;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(fine_dofs.size()));
  for (ElementId t : pair_.element_children[element]) {
    const LocalMatrix st = local_stiffness(fine, t, fine_coefficients_[t]);
    const auto& tv = fine.element(t);
    Eigen::Vector3d phi;
    for (int j = 0; j < 3; ++j) {
      phi[j] = coarse_barycentric(pair_, element, local, tv[j]);
    }
    const Eigen::Vector3d contrib = st * phi;
    for (int i = 0; i < 3; ++i) {
      const auto gi = fine.interior_index(tv[i]);
      if (gi < 0) continue;
      const auto li = local_of[gi];
      if (li >= 0) r[li] += contrib[i];
    }
  }
  return r;
}

ElementCorrector CorrectorProblem::solve(ElementId element, int ell) const {
  const Mesh& coarse = pair_.coarse;
  const Mesh& fine = pair_.fine;
  ElementCorrector out;
  out.element = element;
  out.ell = ell;
  out.patch = element_patch(coarse, element, ell);

  std::vector<char> fine_in_patch(fine.num_elements(), 0);
  for (ElementId k : out.patch) {
    for (ElementId t : pair_.element_children[k]) fine_in_patch[t] = 1;
  }

  // Free DOFs: interior fine vertices whose incident elements all lie in the
  // patch (the fine functions vanish on the patch boundary).
  std::vector<char> seen(fine.num_vertices(), 0);
  for (ElementId k : out.patch) {
    for (ElementId t : pair_.element_children[k]) {
      for (VertexId v : fine.element(t)) {
        if (seen[v]) continue;
        seen[v] = 1;
        const auto gi = fine.interior_index(v);
        if (gi < 0) continue;
        const auto inc = fine.incident_elements(v);
        if (std::all_of(inc.begin(), inc.end(),
                        [&](ElementId e) { return fine_in_patch[e] != 0; })) {
          out.fine_dofs.push_back(gi);
        }
      }
    }
  }
  std::sort(out.fine_dofs.begin(), out.fine_dofs.end());
  const auto n = static_cast<Eigen::Index>(out.fine_dofs.size());

  std::vector<std::int32_t> local_of(fine.num_interior(), -1);
  for (std::size_t k = 0; k < out.fine_dofs.size(); ++k) {
    local_of[out.fine_dofs[k]] = static_cast<std::int32_t>(k);
  }

  // Patch stiffness.
  std::vector<Eigen::Triplet<double>> triplets;
  const SparseMatrix& s = stiffness_.matrix;
  for (Eigen::Index lj = 0; lj < n; ++lj) {
    for (SparseMatrix::InnerIterator it(s, out.fine_dofs[lj]); it; ++it) {
      const auto li = local_of[it.row()];
      if (li >= 0) triplets.emplace_back(li, lj, it.value());
    }
  }
  SparseMatrix s_loc(n, n);
  s_loc.setFromTriplets(triplets.begin(), triplets.end());

  // Constraint rows: interior coarse vertices of patch elements. Rows with no
  // entry on the free DOFs impose nothing and are skipped.
  std::vector<std::int32_t> candidates;
  for (ElementId k : out.patch) {
    for (VertexId z : coarse.element(k)) {
      const auto ci = coarse.interior_index(z);
      if (ci >= 0) candidates.push_back(ci);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  triplets.clear();
  const RowSparseMatrix& interp = transfer_.interpolation();
  for (std::int32_t ci : candidates) {
    const auto row = static_cast<Eigen::Index>(out.constraint_nodes.size());
    bool any = false;
    for (RowSparseMatrix::InnerIterator it(interp, ci); it; ++it) {
      const auto lj = local_of[it.col()];
      if (lj >= 0 && it.value() != 0.0) {
        triplets.emplace_back(row, lj, it.value());
        any = true;
      }
    }
    if (any) out.constraint_nodes.push_back(ci);
  }
  SparseMatrix c_loc(static_cast<Eigen::Index>(out.constraint_nodes.size()), n);
  c_loc.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
  bool any_interior = false;
  for (int a = 0; a < 3; ++a) {
    out.coarse_dofs[a] = coarse.interior_index(coarse.element(element)[a]);
    if (out.coarse_dofs[a] < 0) continue;
    any_interior = true;
    rhs.col(a) = element_load(element, a, out.fine_dofs, local_of);
  }
  if (!any_interior || n == 0) {
    out.values = Eigen::MatrixXd::Zero(n, 3);
    return out;
  }

  try {
    out.values = solve_constrained(s_loc, c_loc, rhs, &out.residual);
  } catch (const SolverError& e) {
    throw CorrectorSolveFailure(element, e.what());
  }
  if (!(out.residual <= kResidualTolerance)) {
    throw CorrectorSolveFailure(
        element, fmt::format("relative residual {:.3e} above tolerance",
                             out.residual));
  }
  return out;
}

Eigen::VectorXd CorrectorProblem::global_corrector(
    std::int32_t coarse_dof) const {
  const SparseMatrix& s = stiffness_.matrix;
  const SparseMatrix c(transfer_.interpolation());
  const Eigen::VectorXd hat = transfer_.prolongation().col(coarse_dof);
  const Eigen::MatrixXd rhs = s * hat;
  double residual = 0.0;
  Eigen::MatrixXd q = solve_constrained(s, c, rhs, &residual);
  if (!(residual <= kResidualTolerance)) {
    throw SolverError(
        fmt::format("global corrector residual {:.3e} above tolerance",
                    residual));
  }
  return q.col(0);
}

ElementCorrector compute_element_corrector(const LevelPair& pair,
                                           const CoefficientField& a,
                                           const SparseOperator& fine_stiffness,
                                           ElementId element, int ell) {
  if (ell < 1) throw InvalidArgument("localization parameter must be >= 1");
  return CorrectorProblem(pair, a, fine_stiffness).solve(element, ell);
}

// -- MultiscaleSpace ----------------------------------------------------------

namespace {

SparseMatrix galerkin_product(const SparseMatrix& basis,
                              const SparseMatrix& op) {
  const SparseMatrix ob = op * basis;
  SparseMatrix g = SparseMatrix(basis.transpose()) * ob;
  // Floating-point addition commutes, so this is exactly symmetric.
  const SparseMatrix gt = g.transpose();
  SparseMatrix sym = 0.5 * (g + gt);
  sym.makeCompressed();
  return sym;
}

}  // namespace

MultiscaleSpace::MultiscaleSpace(LevelPair pair, int ell, Kind kind,
                                 SparseMatrix prolongation,
                                 SparseMatrix correctors,
                                 const SparseOperator& fine_stiffness,
                                 const SparseOperator& fine_mass,
                                 std::uint64_t coefficient_hash,
                                 double offline_seconds)
    : pair_(std::move(pair)),
      ell_(ell),
      kind_(kind),
      correctors_(std::move(correctors)),
      coefficient_hash_(coefficient_hash),
      offline_seconds_(offline_seconds) {
  if (correctors_.rows() != prolongation.rows() ||
      correctors_.cols() != prolongation.cols()) {
    throw InvalidArgument("corrector matrix shape does not match the basis");
  }
  basis_ = prolongation - correctors_;
  basis_.makeCompressed();
  stiffness_ = {tag(), galerkin_product(basis_, fine_stiffness.matrix)};
  mass_ = {tag(), galerkin_product(basis_, fine_mass.matrix)};
  auto solver = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(
      mass_.matrix);
  if (solver->info() != Eigen::Success) {
    throw SolverError("multiscale mass matrix factorization failed");
  }
  mass_solver_ = std::move(solver);
}

MultiscaleSpace MultiscaleSpace::coarse_fem(LevelPair pair,
                                            const SparseOperator& fine_stiffness,
                                            const SparseOperator& fine_mass,
                                            std::uint64_t coefficient_hash) {
  GridTransfer transfer(pair);
  SparseMatrix p = transfer.prolongation();
  SparseMatrix zero(p.rows(), p.cols());
  return MultiscaleSpace(std::move(pair), 0, Kind::CoarseFem, std::move(p),
                         std::move(zero), fine_stiffness, fine_mass,
                         coefficient_hash, 0.0);
}

FieldVector MultiscaleSpace::to_fine(const FieldVector& coefficients) const {
  coefficients.require(tag());
  if (coefficients.size() != dimension()) {
    throw InvalidArgument("coefficient vector has wrong length");
  }
  return {Space::FineInterior, basis_ * coefficients.values};
}

FieldVector MultiscaleSpace::solve_mass(const Eigen::VectorXd& load) const {
  FieldVector x{tag(), mass_solver_->solve(load)};
  if (mass_solver_->info() != Eigen::Success) {
    throw SolverError("multiscale mass solve failed");
  }
  return x;
}

FieldVector MultiscaleSpace::l2_project(const FieldVector& fine,
                                        const SparseOperator& fine_mass) const {
  fine.require(Space::FineInterior);
  if (fine.size() != basis_.rows()) {
    throw InvalidArgument("fine vector has wrong length");
  }
  const Eigen::VectorXd load =
      basis_.transpose() * (fine_mass.matrix * fine.values);
  return solve_mass(load);
}

FieldVector ms_l2_project(const MultiscaleSpace& space, const FieldVector& fine,
                          const SparseOperator& fine_mass) {
  return space.l2_project(fine, fine_mass);
}

MultiscaleSpace build_multiscale_space(const LevelPair& pair,
                                       const CoefficientField& a,
                                       const SparseOperator& fine_stiffness,
                                       const SparseOperator& fine_mass, int ell,
                                       const Parallelism& parallelism) {
  if (ell < 1) throw InvalidArgument("localization parameter must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  CorrectorProblem problem(pair, a, fine_stiffness);
  const auto n_fine = pair.fine.num_interior();
  const auto n_coarse = pair.coarse.num_interior();
  const auto n_elements = static_cast<std::size_t>(pair.coarse.num_elements());

  std::vector<Eigen::SparseVector<double>> columns(
      n_coarse, Eigen::SparseVector<double>(n_fine));
  std::vector<ElementCorrector> block(kElementBlock);
  for (std::size_t first = 0; first < n_elements; first += kElementBlock) {
    const std::size_t count = std::min(kElementBlock, n_elements - first);
    parallel_for(parallelism, count, [&](std::size_t k) {
      block[k] = problem.solve(static_cast<ElementId>(first + k), ell);
    });
    for (std::size_t k = 0; k < count; ++k) {
      const ElementCorrector& ec = block[k];
      for (int local = 0; local < 3; ++local) {
        const auto dof = ec.coarse_dofs[local];
        if (dof < 0) continue;
        Eigen::SparseVector<double> contrib(n_fine);
        contrib.reserve(static_cast<Eigen::Index>(ec.fine_dofs.size()));
        for (std::size_t r = 0; r < ec.fine_dofs.size(); ++r) {
          contrib.insertBack(ec.fine_dofs[r]) =
              ec.values(static_cast<Eigen::Index>(r), local);
        }
        columns[dof] += contrib;
      }
      block[k] = ElementCorrector{};
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t nnz = 0;
  for (const auto& col : columns) nnz += static_cast<std::size_t>(col.nonZeros());
  triplets.reserve(nnz);
  for (Eigen::Index j = 0; j < n_coarse; ++j) {
    for (Eigen::SparseVector<double>::InnerIterator it(columns[j]); it; ++it) {
      triplets.emplace_back(it.index(), j, it.value());
    }
    columns[j] = Eigen::SparseVector<double>();
  }
  SparseMatrix q(n_fine, n_coarse);
  q.setFromTriplets(triplets.begin(), triplets.end());
  triplets = {};

  SparseMatrix p = problem.transfer().prolongation();
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  return MultiscaleSpace(pair, ell, MultiscaleSpace::Kind::Lod, std::move(p),
                         std::move(q), fine_stiffness, fine_mass, a.hash(),
                         seconds);
}

std::vector<DecayEntry> corrector_decay_report(
    const LevelPair& pair, const CoefficientField& a,
    const SparseOperator& fine_stiffness, VertexId coarse_vertex,
    int ell_max) {
  const auto dof = pair.coarse.interior_index(coarse_vertex);
  if (dof < 0) {
    throw InvalidArgument("decay report needs an interior coarse vertex");
  }
  if (ell_max < 1) throw InvalidArgument("ell_max must be >= 1");
  CorrectorProblem problem(pair, a, fine_stiffness);
  const Eigen::VectorXd ideal = problem.global_corrector(dof);
  const SparseMatrix& s = problem.stiffness().matrix;
  const auto n_fine = pair.fine.num_interior();

  std::vector<DecayEntry> report;
  for (int ell = 1; ell <= ell_max; ++ell) {
    Eigen::VectorXd local = Eigen::VectorXd::Zero(n_fine);
    for (ElementId k : pair.coarse.incident_elements(coarse_vertex)) {
      const ElementCorrector ec = problem.solve(k, ell);
      for (int l = 0; l < 3; ++l) {
        if (ec.coarse_dofs[l] == dof) local += ec.to_fine(l, n_fine);
      }
    }
    const Eigen::VectorXd diff = ideal - local;
    report.push_back({ell, std::sqrt(std::max(0.0, quadratic_form(s, diff)))});
  }
  return report;
}

}  // namespace lodspde
