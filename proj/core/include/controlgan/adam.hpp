#pragma once

#include "controlgan/model.hpp"

namespace controlgan {

// Standard bias-corrected Adam. Accumulator slots mirror the ParamSet
// entry order exactly; lr may be changed between steps (the trainer's
// learning-rate step-down does).
struct AdamState {
  struct Slot {
    std::vector<real_t> m;
    std::vector<real_t> v;
  };

  std::vector<Slot> slots;
  uint64_t step_count = 0;
  real_t lr = static_cast<real_t>(2e-4);
  real_t beta1 = static_cast<real_t>(0.9);
  real_t beta2 = static_cast<real_t>(0.999);
  real_t eps_hat = static_cast<real_t>(1e-8);

  static AdamState init(const ParamSet& params, real_t lr);

  // One update from the gradients currently on `params`. Throws if any
  // trainable parameter is missing its gradient.
  void apply(ParamSet& params);
};

}  // namespace controlgan
