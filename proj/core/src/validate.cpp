#include "lodspde/validate.hpp"

#include <fmt/format.h>

#include <cmath>

#include "lodspde/noise.hpp"

namespace lodspde {
namespace {

double asymmetry(const SparseMatrix& a) {
  return (a - SparseMatrix(a.transpose())).norm();
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(
    Workbench& bench, const std::vector<int>& coarse_exponents) {
  std::vector<CheckResult> out;
  auto record = [&out](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  const Mesh& mesh = bench.fine_mesh();
  const int p = mesh.level_exponent();
  {
    const auto n = static_cast<std::int64_t>(1) << p;
    bool ok = mesh.num_elements() == 2 * n * n &&
              mesh.num_interior() == (n - 1) * (n - 1);
    double area = 0.0;
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
      const double a = mesh.signed_area(e);
      ok = ok && a > 0.0;
      area += a;
    }
    ok = ok && std::abs(area - 1.0) <= 1e-12;
    record("mesh", ok, fmt::format("elements {}, area {:.17g}", mesh.num_elements(), area));
  }
  {
    const double s = asymmetry(bench.fine_stiffness().matrix);
    const double m = asymmetry(bench.fine_mass().matrix);
    record("fine operator symmetry", s == 0.0 && m == 0.0,
           fmt::format("|S - S^T| = {:.3g}, |M - M^T| = {:.3g}", s, m));
  }
  {
    const SparseMatrix full = assemble_mass_full(mesh);
    const double total = full.sum();
    record("mass partition of unity", std::abs(total - 1.0) <= 1e-13,
           fmt::format("sum = {:.17g}", total));
  }
  for (int q : coarse_exponents) {
    const MultiscaleSpace& space = bench.lod_space(q);
    const GridTransfer transfer(space.pair());
    const Eigen::Index n = space.dimension();
    const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
    const FieldVector back = transfer.quasi_interpolate(
        transfer.prolongate({Space::CoarseInterior, c}));
    const double proj = (back.values - c).lpNorm<Eigen::Infinity>();
    record(fmt::format("projection property H=2^-{}", q), proj <= 1e-12,
           fmt::format("max |I P c - c| = {:.3g}", proj));

    const SparseMatrix iq = SparseMatrix(transfer.interpolation()) *
                            space.correctors();
    const double kernel = iq.size() > 0 && iq.nonZeros() > 0
                              ? Eigen::MatrixXd(iq).cwiseAbs().maxCoeff()
                              : 0.0;
    record(fmt::format("corrector kernel H=2^-{}", q), kernel <= 1e-10,
           fmt::format("max |I Q| = {:.3g}", kernel));

    const double ss = asymmetry(space.stiffness().matrix);
    const double ms = asymmetry(space.mass().matrix);
    record(fmt::format("multiscale symmetry H=2^-{}", q), ss == 0.0 && ms == 0.0,
           fmt::format("{:.3g}, {:.3g}", ss, ms));
  }
  {
    NoiseModel model;
    model.truncation = 4;
    model.steps = 5;
    const NoisePath a = sample_path(model, 7, 3);
    const NoisePath b = sample_path(model, 7, 3);
    const bool same = std::equal(a.data().begin(), a.data().end(),
                                 b.data().begin(), b.data().end());
    record("noise reproducibility", same, "");
  }
  {
    const auto alloc = SampleAllocation::mlmc(0.01, 1.0, 3);
    bool ok = alloc.levels[0].samples == 656;
    for (const auto& l : alloc.levels) ok = ok && l.samples >= 1;
    record("allocation", ok, fmt::format("M_0 = {}", alloc.levels[0].samples));
  }
  return out;
}

}  // namespace lodspde
