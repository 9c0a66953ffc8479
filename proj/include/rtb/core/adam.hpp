#pragma once

#include <cstdint>
#include <vector>

#include "rtb/core/tensor.hpp"

namespace rtb {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // l2 coefficient, added to the gradient as wd * param
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;
};

// One Adam update. The state is sized on first use; afterwards params, grads
// and state must keep matching shapes.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& config);

}  // namespace rtb
