#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "lodspde/fem.hpp"
#include "lodspde/mesh.hpp"

namespace lodspde {

/// Q-Wiener noise with eigenpairs
///   e_{m,n} = sin(m pi x) sin(n pi y),
///   lambda_{m,n} = amplitude / (m^(2+decay) + n^(2+decay)),
/// truncated to 1 <= m, n <= truncation, on N uniform steps of length k.
struct NoiseModel {
  double amplitude = 1.0;
  double decay = 0.01;
  int truncation = 1;
  double timestep = 0.01;
  int steps = 50;

  double eigenvalue(int m, int n) const;
  /// sum of lambda_{m,n} over the truncated index set.
  double truncated_trace() const;
  void validate() const;
};

double eigenvalue(const NoiseModel& model, int m, int n);

/// round(fraction / h), at least 1.
int default_truncation(int fine_exponent, double fraction = 1.0 / 16.0);

/// Brownian increments Delta beta_{m,n}(t_j) ~ Normal(0, k) for one sample.
///
/// Mode (m, n) draws from its own stream keyed by (seed, sample index, m, n),
/// so enlarging the truncation leaves existing modes unchanged.
class NoisePath {
 public:
  NoisePath() = default;
  NoisePath(int steps, int truncation, std::vector<double> increments,
            std::uint64_t seed, std::uint64_t sample_index);

  /// All increments zero.
  static NoisePath zero(const NoiseModel& model);

  int steps() const noexcept { return steps_; }
  int truncation() const noexcept { return truncation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t sample_index() const noexcept { return sample_index_; }

  /// step in 1..N, modes in 1..truncation.
  double increment(int step, int m, int n) const {
    return increments_[index(step, m, n)];
  }
  /// Increments of one step, row-major over (m, n).
  std::span<const double> step(int step) const {
    return {increments_.data() + index(step, 1, 1),
            static_cast<std::size_t>(truncation_) * truncation_};
  }
  std::span<const double> data() const noexcept { return increments_; }

 private:
  std::size_t index(int step, int m, int n) const {
    return (static_cast<std::size_t>(step - 1) * truncation_ + (m - 1)) *
               truncation_ +
           (n - 1);
  }

  int steps_ = 0;
  int truncation_ = 0;
  std::vector<double> increments_;
  std::uint64_t seed_ = 0;
  std::uint64_t sample_index_ = 0;
};

NoisePath sample_path(const NoiseModel& model, std::uint64_t seed,
                      std::uint64_t sample_index);

/// Sine modes sampled on the interior vertices of a mesh.
class ModeBasis {
 public:
  ModeBasis(const Mesh& mesh, int truncation);

  int truncation() const noexcept { return truncation_; }

  /// Nodal values of sum_{m,n} coeffs(m-1, n-1) e_{m,n}, by the separable
  /// product S_x C S_y^T.
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& coeffs) const;

  /// interior x truncation^2 matrix of nodal mode values; column
  /// (m-1) truncation + (n-1).
  Eigen::MatrixXd nodal_matrix() const;

 private:
  int truncation_ = 0;
  Eigen::Index side_ = 0;
  Eigen::MatrixXd sines_;  // side x truncation, sin(m pi x_i)
};

/// Coefficients sqrt(lambda_{m,n}) Delta beta_{m,n}(t_j) as a matrix.
Eigen::MatrixXd scaled_increments(const NoiseModel& model,
                                  const NoisePath& path, int step);

/// Nodal values of Delta W^kappa(t_j) at interior vertices.
FieldVector increment_field(const NoiseModel& model, const NoisePath& path,
                            int step, const Mesh& mesh);

/// int e_{m,n} phi_j for every interior hat, by collapsed Gauss-Legendre
/// quadrature on each triangle. Same column layout as nodal_matrix().
Eigen::MatrixXd mode_loads_quadrature(const Mesh& mesh, int truncation);

}  // namespace lodspde
