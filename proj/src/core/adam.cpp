#include "core/adam.hpp"

#include <cmath>

#include "core/error.hpp"

namespace msuda {

std::size_t param_count(const ParamSet& params) {
  std::size_t n = 0;
  for (const auto& b : params) n += b.count;
  return n;
}

AdamState::AdamState(const ParamSet& params, double learning_rate)
    : lr(learning_rate) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& b : params) {
    m_.emplace_back(b.count, 0.0);
    v_.emplace_back(b.count, 0.0);
  }
}

void AdamState::step(const ParamSet& params) {
  if (params.size() != m_.size())
    throw_dimension("adam step: parameter set does not match optimizer state");
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t bi = 0; bi < params.size(); ++bi) {
    const ParamBlock& blk = params[bi];
    if (blk.count != m_[bi].size())
      throw_dimension("adam step: block '" + blk.name + "' changed size");
    double* m = m_[bi].data();
    double* v = v_[bi].data();
    for (std::size_t i = 0; i < blk.count; ++i) {
      const double g = blk.grad[i];
      if (!std::isfinite(g))
        throw_numeric("non-finite gradient in parameter block '" + blk.name + "'");
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      blk.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      blk.grad[i] = 0.0;
    }
  }
}

}  // namespace msuda
