#pragma once

#include <cstdint>
#include <filesystem>

#include "lodspde/lod.hpp"

namespace lodspde {

/// Binary corrector cache, little-endian:
///
///   char[8]  magic "LODMSB01"
///   int32    coarse exponent p_H
///   int32    fine exponent p_h
///   int32    localization ell
///   uint64   coefficient hash (CoefficientField::hash)
///   float64  corrector build time in seconds
///   int64    rows, cols, nnz of the corrector matrix Q
///   int64    outer index [cols + 1]   (column-compressed)
///   int32    inner index [nnz]
///   float64  values [nnz]
///
/// Stores Q; the basis B = P - Q and the Galerkin matrices are rebuilt on
/// load.
struct BasisCacheHeader {
  std::int32_t coarse_exponent = 0;
  std::int32_t fine_exponent = 0;
  std::int32_t ell = 0;
  std::uint64_t coefficient_hash = 0;
  double offline_seconds = 0.0;

  /// Equality of the identifying fields (the build time is ignored).
  bool matches(const BasisCacheHeader& other) const noexcept {
    return coarse_exponent == other.coarse_exponent &&
           fine_exponent == other.fine_exponent && ell == other.ell &&
           coefficient_hash == other.coefficient_hash;
  }
};

void save_basis(const MultiscaleSpace& space, const std::filesystem::path& path);

BasisCacheHeader read_basis_header(const std::filesystem::path& path);

/// Rebuilds the space from a cache file. Throws CacheMismatch unless
/// (p_H, p_h, ell, coefficient hash) all match the request.
MultiscaleSpace load_multiscale_space(const std::filesystem::path& path,
                                      const LevelPair& pair,
                                      const CoefficientField& a,
                                      const SparseOperator& fine_stiffness,
                                      const SparseOperator& fine_mass, int ell);

}  // namespace lodspde
