#include "doctest.h"

#include <cmath>

#include "core/adam.hpp"
#include "core/error.hpp"

using namespace msuda;

namespace {

struct Scalar {
  double value = 0.0;
  double grad = 0.0;
  ParamSet params() { return {{"w", &value, &grad, 1, 1, 1}}; }
};

// Hand-coded reference Adam on one scalar, written independently of the
// library implementation.
struct ScalarAdamOracle {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  int t = 0;

  explicit ScalarAdamOracle(double lr) : lr(lr) {}

  double update(double w, double g) {
    ++t;
    m = beta1 * m + (1 - beta1) * g;
    v = beta2 * v + (1 - beta2) * g * g;
    const double m_hat = m / (1 - std::pow(beta1, t));
    const double v_hat = v / (1 - std::pow(beta2, t));
    return w - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
};

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged and advances the step") {
  Scalar w;
  w.value = 1.5;
  AdamState adam(w.params(), 0.1);
  adam.step(w.params());
  CHECK(w.value == 1.5);
  CHECK(adam.t == 1);
}

TEST_CASE("first step moves by roughly the learning rate") {
  for (double g : {4.0, -0.003, 123.0}) {
    Scalar w;
    w.value = 0.0;
    w.grad = g;
    AdamState adam(w.params(), 0.01);
    adam.step(w.params());
    // bias-corrected first step is lr * sign(g) up to eps
    CHECK(std::abs(w.value) == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(std::signbit(w.value) == (g > 0));  // moves against the gradient
    CHECK(w.grad == 0.0);                     // gradients cleared after the step
  }
}

TEST_CASE("adam minimizes w^2 and tracks the scalar oracle") {
  Scalar w;
  w.value = 1.0;
  AdamState adam(w.params(), 0.1);
  ScalarAdamOracle oracle(0.1);
  double w_ref = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double g = 2.0 * w.value;
    w.grad = g;
    adam.step(w.params());
    w_ref = oracle.update(w_ref, 2.0 * w_ref);
    CHECK(w.value == doctest::Approx(w_ref).epsilon(1e-12));
  }
  CHECK(std::abs(w.value) < 0.1);
}

TEST_CASE("non-finite gradients abort naming the block") {
  Scalar w;
  w.grad = std::nan("");
  AdamState adam(w.params(), 0.1);
  try {
    adam.step(w.params());
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
    CHECK(std::string(e.what()).find("'w'") != std::string::npos);
  }
}
