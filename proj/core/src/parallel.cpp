#include "lodspde/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace lodspde {

void parallel_for(const Parallelism& parallelism, std::size_t n,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (parallelism.threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Allow the requested worker count even above the hardware count.
  tbb::global_control limit(tbb::global_control::max_allowed_parallelism,
                            static_cast<std::size_t>(parallelism.threads));
  tbb::task_arena arena(parallelism.threads);
  arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, 1),
                      [&](const tbb::blocked_range<std::size_t>& r) {
                        for (std::size_t i = r.begin(); i != r.end(); ++i) {
                          body(i);
                        }
                      });
  });
}

}  // namespace lodspde
