#include "core/gradcheck.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace msuda {

namespace {

void zero_grads(const ParamSet& params) {
  for (const auto& b : params)
    std::memset(b.grad, 0, b.count * sizeof(double));
}

}  // namespace

GradCheckReport gradient_check(const std::function<double()>& loss_with_grads,
                               const ParamSet& params,
                               const GradCheckOptions& opt) {
  zero_grads(params);
  loss_with_grads();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& b : params)
    analytic.emplace_back(b.grad, b.grad + b.count);

  Rng rng(opt.seed);
  GradCheckReport report;
  const double h = opt.step;
  for (std::size_t bi = 0; bi < params.size(); ++bi) {
    const ParamBlock& blk = params[bi];
    if (blk.count == 0) continue;
    for (std::size_t s = 0; s < opt.samples_per_block; ++s) {
      const std::size_t i = static_cast<std::size_t>(rng.below(blk.count));
      const double saved = blk.value[i];
      blk.value[i] = saved + h;
      zero_grads(params);
      const double up = loss_with_grads();
      blk.value[i] = saved - h;
      zero_grads(params);
      const double down = loss_with_grads();
      blk.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[bi][i];
      const double denom = std::max(std::abs(a), std::abs(numeric));
      const double err = denom < 1e-8 ? std::abs(a - numeric)
                                      : std::abs(a - numeric) / denom;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_block = blk.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  zero_grads(params);
  return report;
}

}  // namespace msuda
