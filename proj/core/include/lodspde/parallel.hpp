#pragma once

#include <cstddef>
#include <functional>

namespace lodspde {

/// Worker budget handed down from the CLI. Results never depend on it.
struct Parallelism {
  int threads = 1;
};

/// Runs body(i) for i in [0, n) on at most `threads` workers. Callers write
/// into per-index slots and reduce afterwards in index order.
void parallel_for(const Parallelism& parallelism, std::size_t n,
                  const std::function<void(std::size_t)>& body);

}  // namespace lodspde
