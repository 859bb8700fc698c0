#pragma once

#include <string>
#include <vector>

#include "lodspde/studies.hpp"

namespace lodspde {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant checks on the workbench state: mesh counts and orientation,
/// operator symmetry, mass partition of unity, the projection property of
/// the quasi-interpolation, corrector kernel membership, Galerkin matrix
/// symmetry, noise reproducibility and the MLMC allocation formulas.
/// Builds the LOD spaces of `coarse_exponents` if needed.
std::vector<CheckResult> run_invariant_checks(Workbench& bench,
                                              const std::vector<int>& coarse_exponents);

}  // namespace lodspde
