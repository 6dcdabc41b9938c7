#include "doctest.h"

#include <cmath>

#include "core/gradcheck.hpp"
#include "core/layers.hpp"
#include "core/rng.hpp"

using namespace msuda;

namespace {

ParamSet affine_params(AffineLayer& layer, const std::string& prefix) {
  return {{prefix + ".weight", layer.weight.data.data(), layer.grad_weight.data.data(),
           layer.weight.size(), layer.weight.rows, layer.weight.cols},
          {prefix + ".bias", layer.bias.data(), layer.grad_bias.data(), layer.bias.size(),
           layer.bias.size(), 1}};
}

}  // namespace

TEST_CASE("analytic gradients of affine+softmax+cross-entropy match finite differences") {
  Rng rng(17);
  AffineLayer layer(6, 4);
  layer.init_he(rng);
  Matrix x(3, 6);
  for (double& v : x.data) v = rng.normal();
  const std::vector<int> labels = {1, 3, 0};
  const Matrix targets = onehot_rows(labels, 4);

  auto loss = [&]() {
    const Matrix probs = softmax(layer.forward(x));
    const double value = cross_entropy(probs, targets);
    const Matrix dlogits = softmax_xent_grad(probs, targets);
    layer.backward(x, dlogits, true);
    return value;
  };

  const auto report = gradient_check(loss, affine_params(layer, "head"), {1e-5, 25, 7});
  CAPTURE(report.worst_block);
  CAPTURE(report.worst_analytic);
  CAPTURE(report.worst_numeric);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("scaling a loss by -lambda scales every gradient by -lambda") {
  Rng rng(23);
  AffineLayer layer(5, 3);
  layer.init_he(rng);
  Matrix x(4, 5);
  for (double& v : x.data) v = rng.normal();
  const std::vector<int> labels = {0, 2, 1, 2};
  const Matrix targets = onehot_rows(labels, 3);
  const double lambda = 0.7;

  auto run = [&](double scale) {
    layer.zero_grads();
    const Matrix probs = softmax(layer.forward(x));
    layer.backward(x, softmax_xent_grad(probs, targets, scale), true);
    std::vector<double> grads(layer.grad_weight.data);
    grads.insert(grads.end(), layer.grad_bias.begin(), layer.grad_bias.end());
    return grads;
  };

  const auto base = run(1.0);
  const auto scaled = run(-lambda);
  REQUIRE(base.size() == scaled.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(scaled[i] == doctest::Approx(-lambda * base[i]).epsilon(1e-12));
}

TEST_CASE("gradient check flags a wrong gradient") {
  Rng rng(29);
  AffineLayer layer(4, 2);
  layer.init_he(rng);
  Matrix x(2, 4);
  for (double& v : x.data) v = rng.normal();
  const Matrix targets = onehot_rows({0, 1}, 2);

  auto broken = [&]() {
    const Matrix probs = softmax(layer.forward(x));
    const double value = cross_entropy(probs, targets);
    Matrix dlogits = softmax_xent_grad(probs, targets);
    for (double& g : dlogits.data) g *= 2.0;  // deliberately wrong scale
    layer.backward(x, dlogits, true);
    return value;
  };

  const auto report = gradient_check(broken, affine_params(layer, "head"), {1e-5, 20, 7});
  CHECK(report.max_rel_err > 0.1);
}
