#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lodspde/errors.hpp"
#include "lodspde/fem.hpp"
#include "support/oracles.hpp"

using namespace lodspde;
using namespace lodspde::testing;

namespace {

double sine_bump(Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }

}  // namespace


TEST(Stiffness, ConstantsInKernel) {
  const Mesh m = build_uniform_mesh(3);
  const SparseMatrix s = assemble_stiffness_full(m, CoefficientField::constant(1.0));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_vertices());
  EXPECT_LE((s * ones).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Stiffness, LinearInCoefficient) {
  const Mesh m = build_uniform_mesh(3);
  const CoefficientField a0 = random_field(2, 0.5, 3.0, 1);
  const SparseOperator s0 = assemble_stiffness(m, a0);
  const SparseOperator s1 = assemble_stiffness(m, a0.scaled(2.5));
  EXPECT_LE((SparseMatrix(s1.matrix - 2.5 * s0.matrix)).norm(),
            1e-14 * s1.matrix.norm());
}

TEST(Stiffness, InteriorDiagonalFromGradients) {
  const Mesh m = build_uniform_mesh(3);
  const SparseOperator s = assemble_stiffness(m, CoefficientField::constant(1.0));
  const VertexId z = m.vertex_at(3, 4);
  double diag = 0.0;
  for (ElementId e : m.incident_elements(z)) {
    const auto g = hat_gradients(m, e);
    const auto& t = m.element(e);
    const int local = static_cast<int>(std::find(t.begin(), t.end(), z) - t.begin());
    diag += m.signed_area(e) * g.row(local).squaredNorm();
  }
  EXPECT_NEAR(diag, 4.0, 1e-12);
  EXPECT_NEAR(s.entry(m.interior_index(z), m.interior_index(z)), diag, 1e-12);
}

TEST(Stiffness, ElementMatrixMatchesGradientOracle) {
  const Mesh m = build_uniform_mesh(2);
  for (ElementId e = 0; e < m.num_elements(); ++e) {
    const auto g = hat_gradients(m, e);
    const Eigen::Matrix3d oracle = 1.7 * m.signed_area(e) * g * g.transpose();
    EXPECT_LE((local_stiffness(m, e, 1.7) - oracle).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Stiffness, SymmetricPositiveDefiniteAndBounded) {
  const Mesh m = build_uniform_mesh(4);
  const CoefficientField a = random_field(3, 0.1, 10.0, 9);
  const SparseOperator s = assemble_stiffness(m, a);
  const SparseOperator s1 = assemble_stiffness(m, CoefficientField::constant(1.0));
  const Eigen::MatrixXd d = Eigen::MatrixXd(s.matrix);
  EXPECT_EQ((d - d.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(d.rows());
    for (auto& x : v) x = n(rng);
    const double qa = quadratic_form(s.matrix, v);
    const double q1 = quadratic_form(s1.matrix, v);
    EXPECT_GE(qa, a.alpha_minus() * q1 * (1 - 1e-12));
    EXPECT_LE(qa, a.alpha_plus() * q1 * (1 + 1e-12));
  }
}

TEST(Stiffness, RejectsMisalignedCoefficient) {
  const Mesh m = build_uniform_mesh(3);
  EXPECT_THROW(assemble_stiffness(m, CoefficientField::constant(1.0, 4)),
               InvalidArgument);
}

TEST(Mass, TotalIsArea) {
  const Mesh m = build_uniform_mesh(4);
  EXPECT_NEAR(assemble_mass_full(m).sum(), 1.0, 1e-13);
}

TEST(Mass, LocalMatrixMatchesQuadrature) {
  const Mesh m = build_uniform_mesh(2);
  for (ElementId e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.element(e);
    Eigen::Matrix3d oracle = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) {
      const Point& a = m.vertex(t[k]);
      const Point& b = m.vertex(t[(k + 1) % 3]);
      const Eigen::Vector3d lam =
          barycentric(m, t, {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      oracle += m.signed_area(e) / 3.0 * lam * lam.transpose();
    }
    EXPECT_LE((local_mass(m, e) - oracle).cwiseAbs().maxCoeff(), 1e-15);
  }
  const double a = m.signed_area(0);
  EXPECT_NEAR(local_mass(m, 0)(0, 0), a / 6.0, 1e-16);
  EXPECT_NEAR(local_mass(m, 0)(0, 1), a / 12.0, 1e-16);
}

TEST(Mass, SymmetricAndRowSums) {
  const Mesh m = build_uniform_mesh(3);
  const SparseMatrix full = assemble_mass_full(m);
  const Eigen::MatrixXd d(full);
  EXPECT_EQ((d - d.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const double h2 = m.width() * m.width();
  for (VertexId v = 0; v < m.num_vertices(); ++v) {
    double integral = 0.0;  // int phi_v = sum of |T| / 3
    for (ElementId e : m.incident_elements(v)) integral += m.signed_area(e) / 3.0;
    EXPECT_NEAR(d.row(v).sum(), integral, 1e-13);
    if (!m.is_boundary(v)) {
      EXPECT_NEAR(integral, h2, 1e-15);
    }
  }
}

TEST(Projection, HatIsFixed) {
  const Mesh m = build_uniform_mesh(3);
  const VertexId z = m.vertex_at(2, 5);
  // The P1 hat at z, evaluated through the mesh triangles.
  PointFunction hat = [&](Point p) {
    double best = 0.0;
    for (ElementId e : m.incident_elements(z)) {
      const auto& t = m.element(e);
      const Eigen::Vector3d lam = barycentric(m, t, p);
      if (lam.minCoeff() >= -1e-12) {
        const int local = static_cast<int>(std::find(t.begin(), t.end(), z) - t.begin());
        best = std::max(best, lam[local]);
      }
    }
    return best;
  };
  const FieldVector x = l2_project_onto_fine(m, hat);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(m.num_interior());
  unit[m.interior_index(z)] = 1.0;
  EXPECT_LE((x.values - unit).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Projection, ZeroIsZero) {
  const Mesh m = build_uniform_mesh(3);
  const FieldVector x = l2_project_onto_fine(m, [](Point) { return 0.0; });
  EXPECT_EQ(x.values.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(x.space, Space::FineInterior);
}

TEST(Projection, SecondOrderAgainstInterpolant) {
  std::vector<double> err;
  for (int p = 4; p <= 7; ++p) {
    const Mesh m = build_uniform_mesh(p);
    const SparseOperator mass = assemble_mass(m);
    const FieldVector proj = l2_project_onto_fine(m, mass, sine_bump);
    const FieldVector interp = nodal_interpolant(m, sine_bump);
    err.push_back(l2_norm(mass, {Space::FineInterior, proj.values - interp.values}));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.9) << "level " << i + 4;
  }
}

TEST(Prolongation, CoarseHatValues) {
  const LevelPair pair = make_level_pair(1, 2);
  FieldVector c{Space::CoarseInterior, Eigen::VectorXd::Ones(1)};
  const FieldVector f = prolongate(pair, c);
  const Mesh& fm = pair.fine;
  for (VertexId v : fm.interior_vertices()) {
    const Point p = fm.vertex(v);
    // Analytic coarse hat at (1/2, 1/2) on the LL-UR split.
    const double x = p.x - 0.5, y = p.y - 0.5;
    double value;
    if (x * y >= 0) {
      value = 1.0 - 2.0 * std::max(std::abs(x), std::abs(y));
    } else {
      value = 1.0 - 2.0 * (std::abs(x) + std::abs(y));
    }
    EXPECT_NEAR(f.values[fm.interior_index(v)], std::max(0.0, value), 1e-15);
  }
  EXPECT_EQ(f.values[fm.interior_index(fm.vertex_at(2, 2))], 1.0);
  EXPECT_EQ(f.values[fm.interior_index(fm.vertex_at(1, 2))], 0.5);
}

TEST(Prolongation, HatAtSharedVerticesTwoSteps) {
  const LevelPair pair = make_level_pair(1, 3);
  const FieldVector f =
      prolongate(pair, {Space::CoarseInterior, Eigen::VectorXd::Ones(1)});
  for (VertexId cv = 0; cv < pair.coarse.num_vertices(); ++cv) {
    const VertexId fv = pair.vertex_embedding[cv];
    const double expected = pair.coarse.is_boundary(cv) ? 0.0 : 1.0;
    const double got =
        pair.fine.is_boundary(fv) ? 0.0 : f.values[pair.fine.interior_index(fv)];
    EXPECT_EQ(got, expected);
  }
}

TEST(Prolongation, EnergyPreservedForCoarseConstantA) {
  const LevelPair pair = make_level_pair(2, 4);
  const CoefficientField a = random_field(2, 0.5, 4.0, 5);
  const SparseOperator sf = assemble_stiffness(pair.fine, a);
  const SparseOperator sc = assemble_stiffness(pair.coarse, a, Space::CoarseInterior);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::VectorXd v(pair.coarse.num_interior());
  for (auto& x : v) x = n(rng);
  const FieldVector pv = prolongate(pair, {Space::CoarseInterior, v});
  EXPECT_NEAR(energy_norm(sf, pv), energy_norm(sc, {Space::CoarseInterior, v}), 1e-10);
}

TEST(QuasiInterpolation, FixesCoarseSpace) {
  const LevelPair pair = make_level_pair(2, 4);
  const GridTransfer t(pair);
  for (Eigen::Index i = 0; i < pair.coarse.num_interior(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(pair.coarse.num_interior());
    e[i] = 1.0;
    const FieldVector back =
        t.quasi_interpolate(t.prolongate({Space::CoarseInterior, e}));
    EXPECT_LE((back.values - e).lpNorm<Eigen::Infinity>(), 1e-12);
  }
  const FieldVector zero =
      t.quasi_interpolate({Space::FineInterior, Eigen::VectorXd::Zero(pair.fine.num_interior())});
  EXPECT_EQ(zero.values.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(QuasiInterpolation, ProjectionProperty) {
  const LevelPair pair = make_level_pair(2, 5);
  const GridTransfer t(pair);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  Eigen::VectorXd v(pair.fine.num_interior());
  for (auto& x : v) x = n(rng);
  const FieldVector iv = t.quasi_interpolate({Space::FineInterior, v});
  const FieldVector iiv = t.quasi_interpolate(t.prolongate(iv));
  EXPECT_LE((iiv.values - iv.values).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(QuasiInterpolation, MatchesDenseOracle) {
  const LevelPair pair = make_level_pair(2, 4);
  const GridTransfer t(pair);
  // A single fine hat inside one coarse element.
  const VertexId z = pair.fine.vertex_at(5, 2);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(pair.fine.num_interior());
  v[pair.fine.interior_index(z)] = 1.0;
  const Eigen::VectorXd oracle = dense_quasi_interpolation(pair, v);
  const FieldVector got = t.quasi_interpolate({Space::FineInterior, v});
  EXPECT_LE((got.values - oracle).lpNorm<Eigen::Infinity>(), 1e-12);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (auto& x : v) x = n(rng);
  EXPECT_LE((t.quasi_interpolate({Space::FineInterior, v}).values -
             dense_quasi_interpolation(pair, v))
                .lpNorm<Eigen::Infinity>(),
            1e-12);
}

TEST(QuasiInterpolation, FineAllInputAgrees) {
  const LevelPair pair = make_level_pair(1, 3);
  const GridTransfer t(pair);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  Eigen::VectorXd v(pair.fine.num_interior());
  for (auto& x : v) x = n(rng);
  const FieldVector a = t.quasi_interpolate({Space::FineInterior, v});
  const FieldVector b = t.quasi_interpolate({Space::FineAll, extend(pair.fine, v)});
  EXPECT_LE((a.values - b.values).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(QuasiInterpolation, StabilityBound) {
  const LevelPair pair = make_level_pair(2, 5);
  const GridTransfer t(pair);
  const SparseOperator s = assemble_stiffness(pair.fine, CoefficientField::constant(1.0));
  const SparseOperator m = assemble_mass(pair.fine);
  const double big_h = pair.coarse.width();
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int draw = 0; draw < 200; ++draw) {
    Eigen::VectorXd v(pair.fine.num_interior());
    for (auto& x : v) x = n(rng);
    const FieldVector fv{Space::FineInterior, v};
    const FieldVector piv = t.prolongate(t.quasi_interpolate(fv));
    const double lhs =
        l2_norm(m, {Space::FineInterior, v - piv.values}) / big_h + energy_norm(s, piv);
    worst = std::max(worst, lhs / energy_norm(s, fv));
  }
  RecordProperty("max_ratio", std::to_string(worst));
  EXPECT_LE(worst, 10.0);
}

TEST(Tags, MismatchRejected) {
  const LevelPair pair = make_level_pair(1, 2);
  const GridTransfer t(pair);
  EXPECT_THROW(t.prolongate({Space::FineInterior, Eigen::VectorXd::Zero(1)}), TagMismatch);
  EXPECT_THROW(t.quasi_interpolate({Space::CoarseInterior, Eigen::VectorXd::Zero(9)}),
               TagMismatch);
  const SparseOperator s = assemble_stiffness(pair.fine, CoefficientField::constant(1.0));
  EXPECT_THROW(energy_norm(s, {Space::CoarseInterior, Eigen::VectorXd::Zero(9)}), TagMismatch);
  EXPECT_THROW(energy_norm(s, {Space::FineInterior, Eigen::VectorXd::Zero(3)}), InvalidArgument);
}

TEST(EnergyNorm, ZeroHomogeneousAndDirichletIntegral) {
  const Mesh m = build_uniform_mesh(6);
  const SparseOperator s = assemble_stiffness(m, CoefficientField::constant(1.0));
  const FieldVector v = nodal_interpolant(m, sine_bump);
  EXPECT_EQ(energy_norm(s, {Space::FineInterior, Eigen::VectorXd::Zero(v.size())}), 0.0);
  EXPECT_NEAR(energy_norm(s, {Space::FineInterior, -3.0 * v.values}),
              3.0 * energy_norm(s, v), 1e-12);
  EXPECT_NEAR(energy_norm(s, v), kPi / std::sqrt(2.0), 0.01 * kPi / std::sqrt(2.0));
}

TEST(Load, ExactForQuadraticIntegrands) {
  const Mesh m = build_uniform_mesh(3);
  const Eigen::VectorXd ones = assemble_load(m, [](Point) { return 1.0; });
  const SparseMatrix full_mass = assemble_mass_full(m);
  // Constant f: b = M 1 restricted to interior rows.
  const Eigen::VectorXd m1 = full_mass * Eigen::VectorXd::Ones(m.num_vertices());
  for (VertexId v : m.interior_vertices()) {
    EXPECT_NEAR(ones[m.interior_index(v)], m1[v], 1e-15);
  }
  // Linear f interpolates exactly, so b = M f_h.
  const Eigen::VectorXd bx = assemble_load(m, [](Point p) { return p.x; });
  Eigen::VectorXd fx(m.num_vertices());
  for (VertexId v = 0; v < m.num_vertices(); ++v) fx[v] = m.vertex(v).x;
  const Eigen::VectorXd mfx = full_mass * fx;
  for (VertexId v : m.interior_vertices()) {
    EXPECT_NEAR(bx[m.interior_index(v)], mfx[v], 1e-15);
  }
}
