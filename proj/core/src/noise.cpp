#include "lodspde/noise.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "lodspde/errors.hpp"
#include "lodspde/random.hpp"

namespace lodspde {

double NoiseModel::eigenvalue(int m, int n) const {
  if (m < 1 || n < 1) throw InvalidArgument("mode indices start at 1");
  return amplitude /
         (std::pow(static_cast<double>(m), 2.0 + decay) +
          std::pow(static_cast<double>(n), 2.0 + decay));
}

double NoiseModel::truncated_trace() const {
  double sum = 0.0;
  for (int m = 1; m <= truncation; ++m) {
    for (int n = 1; n <= truncation; ++n) sum += eigenvalue(m, n);
  }
  return sum;
}

void NoiseModel::validate() const {
  if (!(amplitude >= 0.0) || !(decay > -2.0) || truncation < 1 ||
      !(timestep > 0.0) || steps < 1) {
    throw InvalidArgument("invalid noise model parameters");
  }
}

double eigenvalue(const NoiseModel& model, int m, int n) {
  return model.eigenvalue(m, n);
}

int default_truncation(int fine_exponent, double fraction) {
  const double cells = std::ldexp(1.0, fine_exponent);
  return std::max(1, static_cast<int>(std::lround(fraction * cells)));
}

NoisePath::NoisePath(int steps, int truncation, std::vector<double> increments,
                     std::uint64_t seed, std::uint64_t sample_index)
    : steps_(steps),
      truncation_(truncation),
      increments_(std::move(increments)),
      seed_(seed),
      sample_index_(sample_index) {
  if (increments_.size() != static_cast<std::size_t>(steps) * truncation *
                                truncation) {
    throw InvalidArgument("noise path size does not match steps * kappa^2");
  }
}

NoisePath NoisePath::zero(const NoiseModel& model) {
  return NoisePath(model.steps, model.truncation,
                   std::vector<double>(static_cast<std::size_t>(model.steps) *
                                       model.truncation * model.truncation),
                   0, 0);
}

NoisePath sample_path(const NoiseModel& model, std::uint64_t seed,
                      std::uint64_t sample_index) {
  model.validate();
  const int kappa = model.truncation;
  const std::size_t modes = static_cast<std::size_t>(kappa) * kappa;
  std::vector<double> increments(static_cast<std::size_t>(model.steps) * modes);
  const std::uint64_t sample_seed = derive_seed(seed, sample_index);
  const double sd = std::sqrt(model.timestep);
  for (int m = 1; m <= kappa; ++m) {
    for (int n = 1; n <= kappa; ++n) {
      const std::uint64_t key =
          (static_cast<std::uint64_t>(m) << 32) | static_cast<std::uint32_t>(n);
      SplitMix64 rng(derive_seed(sample_seed, key));
      std::normal_distribution<double> normal(0.0, sd);
      const std::size_t offset =
          static_cast<std::size_t>(m - 1) * kappa + (n - 1);
      for (int j = 0; j < model.steps; ++j) {
        increments[static_cast<std::size_t>(j) * modes + offset] = normal(rng);
      }
    }
  }
  return NoisePath(model.steps, kappa, std::move(increments), seed,
                   sample_index);
}

ModeBasis::ModeBasis(const Mesh& mesh, int truncation)
    : truncation_(truncation), side_(mesh.cells_per_side() - 1) {
  if (truncation < 1) throw InvalidArgument("truncation must be >= 1");
  sines_.resize(side_, truncation);
  const double h = mesh.width();
  for (Eigen::Index i = 0; i < side_; ++i) {
    for (int m = 1; m <= truncation; ++m) {
      sines_(i, m - 1) = std::sin(m * std::numbers::pi * (i + 1) * h);
    }
  }
}

Eigen::VectorXd ModeBasis::evaluate(const Eigen::MatrixXd& coeffs) const {
  // Interior vertex (i, j) has index j * side + i, which is the column-major
  // position of F(i, j).
  const Eigen::MatrixXd f = sines_ * coeffs * sines_.transpose();
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

Eigen::MatrixXd ModeBasis::nodal_matrix() const {
  Eigen::MatrixXd out(side_ * side_, truncation_ * truncation_);
  for (int m = 0; m < truncation_; ++m) {
    for (int n = 0; n < truncation_; ++n) {
      const auto col = m * truncation_ + n;
      for (Eigen::Index j = 0; j < side_; ++j) {
        for (Eigen::Index i = 0; i < side_; ++i) {
          out(j * side_ + i, col) = sines_(i, m) * sines_(j, n);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd scaled_increments(const NoiseModel& model,
                                  const NoisePath& path, int step) {
  const int kappa = path.truncation();
  Eigen::MatrixXd c(kappa, kappa);
  const auto incr = path.step(step);
  for (int m = 1; m <= kappa; ++m) {
    for (int n = 1; n <= kappa; ++n) {
      c(m - 1, n - 1) = std::sqrt(model.eigenvalue(m, n)) *
                        incr[static_cast<std::size_t>(m - 1) * kappa + (n - 1)];
    }
  }
  return c;
}

FieldVector increment_field(const NoiseModel& model, const NoisePath& path,
                            int step, const Mesh& mesh) {
  if (step < 1 || step > path.steps()) {
    throw InvalidArgument("noise step out of range");
  }
  ModeBasis basis(mesh, path.truncation());
  return {Space::FineInterior,
          basis.evaluate(scaled_increments(model, path, step))};
}

Eigen::MatrixXd mode_loads_quadrature(const Mesh& mesh, int truncation) {
  using Rule = boost::math::quadrature::gauss<double, 7>;
  // Full Gauss-Legendre nodes/weights on [0, 1].
  std::vector<double> nodes;
  std::vector<double> weights;
  const auto& abscissa = Rule::abscissa();
  const auto& weight = Rule::weights();
  for (std::size_t k = 0; k < abscissa.size(); ++k) {
    nodes.push_back(0.5 * (1.0 + abscissa[k]));
    weights.push_back(0.5 * weight[k]);
    if (abscissa[k] != 0.0) {
      nodes.push_back(0.5 * (1.0 - abscissa[k]));
      weights.push_back(0.5 * weight[k]);
    }
  }

  const int kk = truncation * truncation;
  Eigen::MatrixXd loads = Eigen::MatrixXd::Zero(mesh.num_interior(), kk);
  Eigen::VectorXd sx(truncation);
  Eigen::VectorXd sy(truncation);
  for (ElementId e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.element(e);
    const Point& p0 = mesh.vertex(t[0]);
    const Point& p1 = mesh.vertex(t[1]);
    const Point& p2 = mesh.vertex(t[2]);
    const double jac = 2.0 * mesh.signed_area(e);
    std::array<std::int32_t, 3> rows{};
    for (int i = 0; i < 3; ++i) rows[i] = mesh.interior_index(t[i]);
    if (rows[0] < 0 && rows[1] < 0 && rows[2] < 0) continue;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        const double xi = nodes[a];
        const double eta = nodes[b] * (1.0 - xi);
        const double w = weights[a] * weights[b] * (1.0 - xi) * jac;
        const double x = p0.x + xi * (p1.x - p0.x) + eta * (p2.x - p0.x);
        const double y = p0.y + xi * (p1.y - p0.y) + eta * (p2.y - p0.y);
        for (int m = 0; m < truncation; ++m) {
          sx[m] = std::sin((m + 1) * std::numbers::pi * x);
          sy[m] = std::sin((m + 1) * std::numbers::pi * y);
        }
        const std::array<double, 3> lambda{1.0 - xi - eta, xi, eta};
        for (int i = 0; i < 3; ++i) {
          if (rows[i] < 0) continue;
          const double wl = w * lambda[i];
          for (int m = 0; m < truncation; ++m) {
            for (int n = 0; n < truncation; ++n) {
              loads(rows[i], m * truncation + n) += wl * sx[m] * sy[n];
            }
          }
        }
      }
    }
  }
  return loads;
}

}  // namespace lodspde
