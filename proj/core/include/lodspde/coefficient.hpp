#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lodspde/mesh.hpp"

namespace lodspde {

/// Scalar diffusion coefficient, piecewise constant on a 2^e x 2^e grid.
///
/// Values are stored row-major (cell (i, j) at index j 2^e + i).
class CoefficientField {
 public:
  /// Bounds are taken as the min/max of the values.
  CoefficientField(int epsilon_exponent, std::vector<double> values);
  CoefficientField(int epsilon_exponent, std::vector<double> values,
                   double alpha_minus, double alpha_plus);

  static CoefficientField constant(double value, int epsilon_exponent = 0);

  int epsilon_exponent() const noexcept { return epsilon_exponent_; }
  int cells_per_side() const noexcept { return 1 << epsilon_exponent_; }
  double alpha_minus() const noexcept { return alpha_minus_; }
  double alpha_plus() const noexcept { return alpha_plus_; }
  double contrast() const noexcept { return alpha_plus_ / alpha_minus_; }
  std::span<const double> values() const noexcept { return values_; }

  double cell_value(int i, int j) const {
    return values_[static_cast<std::size_t>(j) * cells_per_side() + i];
  }
  /// Value of the cell containing p; points on the right/top edge map to the
  /// last cell.
  double value_at(Point p) const;

  CoefficientField scaled(double factor) const;

  /// FNV-1a over the exponent and the IEEE bytes of every value.
  std::uint64_t hash() const;

  /// Text format:
  ///   lodspde-coefficient 1
  ///   epsilon_exponent <e>
  ///   alpha_minus <a>
  ///   alpha_plus <b>
  ///   values <4^e>
  ///   <one value per line, row-major, 17 significant digits>
  void write(std::ostream& out) const;
  static CoefficientField read(std::istream& in);

  friend bool operator==(const CoefficientField&,
                         const CoefficientField&) = default;

 private:
  void validate() const;

  int epsilon_exponent_ = 0;
  std::vector<double> values_;
  double alpha_minus_ = 1.0;
  double alpha_plus_ = 1.0;
};

}  // namespace lodspde
