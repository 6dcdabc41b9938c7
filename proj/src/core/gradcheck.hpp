#pragma once

#include <functional>

#include "core/adam.hpp"
#include "core/rng.hpp"

namespace msuda {

struct GradCheckOptions {
  double step = 1e-5;                 // central difference half-width
  std::size_t samples_per_block = 20; // coordinates sampled per parameter block
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares the analytic gradient produced by loss_with_grads against central
// finite differences on randomly sampled coordinates. The callback must be a
// pure function of the parameters: it returns the loss and accumulates
// gradients into the blocks' grad buffers (which the checker zeroes around
// every call).
GradCheckReport gradient_check(const std::function<double()>& loss_with_grads,
                               const ParamSet& params,
                               const GradCheckOptions& opt = {});

}  // namespace msuda
