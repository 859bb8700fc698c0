#include "lodspde/coefficient.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "lodspde/errors.hpp"

namespace lodspde {

namespace {

std::size_t expected_size(int e) {
  if (e < 0 || e > 14) {
    throw InvalidArgument("coefficient exponent must lie in [0, 14], got " +
                          std::to_string(e));
  }
  return std::size_t{1} << (2 * e);
}

}  // namespace

CoefficientField::CoefficientField(int epsilon_exponent,
                                   std::vector<double> values)
    : epsilon_exponent_(epsilon_exponent), values_(std::move(values)) {
  if (values_.size() != expected_size(epsilon_exponent_)) {
    throw InvalidArgument("coefficient field needs 4^e values");
  }
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  alpha_minus_ = *lo;
  alpha_plus_ = *hi;
  validate();
}

CoefficientField::CoefficientField(int epsilon_exponent,
                                   std::vector<double> values,
                                   double alpha_minus, double alpha_plus)
    : epsilon_exponent_(epsilon_exponent),
      values_(std::move(values)),
      alpha_minus_(alpha_minus),
      alpha_plus_(alpha_plus) {
  if (values_.size() != expected_size(epsilon_exponent_)) {
    throw InvalidArgument("coefficient field needs 4^e values");
  }
  validate();
}

CoefficientField CoefficientField::constant(double value,
                                            int epsilon_exponent) {
  return CoefficientField(
      epsilon_exponent,
      std::vector<double>(expected_size(epsilon_exponent), value));
}

void CoefficientField::validate() const {
  if (!(alpha_minus_ > 0.0) || !std::isfinite(alpha_plus_)) {
    throw EllipticityViolation(
        fmt::format("coefficient lower bound must be positive, got {}",
                    alpha_minus_));
  }
  if (alpha_minus_ > alpha_plus_) {
    throw InvalidArgument("alpha_minus exceeds alpha_plus");
  }
  for (double v : values_) {
    if (!(v > 0.0)) {
      throw EllipticityViolation(
          fmt::format("nonpositive coefficient value {}", v));
    }
    if (v < alpha_minus_ || v > alpha_plus_) {
      throw EllipticityViolation(fmt::format(
          "coefficient value {} outside [{}, {}]", v, alpha_minus_,
          alpha_plus_));
    }
  }
}

double CoefficientField::value_at(Point p) const {
  const int n = cells_per_side();
  const int i = std::clamp(static_cast<int>(std::floor(p.x * n)), 0, n - 1);
  const int j = std::clamp(static_cast<int>(std::floor(p.y * n)), 0, n - 1);
  return cell_value(i, j);
}

CoefficientField CoefficientField::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return CoefficientField(epsilon_exponent_, std::move(v),
                          alpha_minus_ * factor, alpha_plus_ * factor);
}

std::uint64_t CoefficientField::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(epsilon_exponent_));
  for (double v : values_) mix(std::bit_cast<std::uint64_t>(v));
  return h;
}

void CoefficientField::write(std::ostream& out) const {
  out << "lodspde-coefficient 1\n";
  out << "epsilon_exponent " << epsilon_exponent_ << '\n';
  out << fmt::format("alpha_minus {:.17g}\n", alpha_minus_);
  out << fmt::format("alpha_plus {:.17g}\n", alpha_plus_);
  out << "values " << values_.size() << '\n';
  for (double v : values_) out << fmt::format("{:.17g}\n", v);
}

CoefficientField CoefficientField::read(std::istream& in) {
  std::string key;
  int version = 0;
  if (!(in >> key >> version) || key != "lodspde-coefficient" ||
      version != 1) {
    throw InvalidArgument("not a lodspde coefficient file");
  }
  int e = -1;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  if (!(in >> key >> e) || key != "epsilon_exponent" ||
      !(in >> key >> lo) || key != "alpha_minus" ||
      !(in >> key >> hi) || key != "alpha_plus" ||
      !(in >> key >> count) || key != "values") {
    throw InvalidArgument("malformed coefficient header");
  }
  if (count != expected_size(e)) {
    throw InvalidArgument("coefficient value count does not match 4^e");
  }
  std::vector<double> values(count);
  for (double& v : values) {
    if (!(in >> v)) throw InvalidArgument("truncated coefficient payload");
  }
  return CoefficientField(e, std::move(values), lo, hi);
}

}  // namespace lodspde
