#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msuda {

// Named view over one parameter tensor and its gradient buffer. rows/cols
// record the checkpoint shape (rows * cols == count; vectors use cols = 1).
struct ParamBlock {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

using ParamSet = std::vector<ParamBlock>;

std::size_t param_count(const ParamSet& params);

// Adam with bias correction. One state instance per trained parameter group;
// moment buffers mirror the block layout handed to the constructor.
struct AdamState {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;

  AdamState(const ParamSet& params, double learning_rate);

  // Applies one update over every block, then zeroes the gradients. A
  // non-finite gradient aborts with the offending block named.
  void step(const ParamSet& params);

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace msuda
