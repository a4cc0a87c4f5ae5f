#pragma once

#include <functional>
#include <string>
#include <vector>

#include "controlgan/autodiff.hpp"
#include "controlgan/rng.hpp"

namespace controlgan {

// Central-difference estimate of d f / d x per coordinate:
// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). The test-side oracle for
// every analytic gradient in the project; f must be deterministic and is
// evaluated without any tape.
std::vector<real_t> finite_difference_gradient(
    const std::function<real_t(const Tensor&)>& f, const Tensor& x, real_t eps);

struct GradCheckRow {
  std::string name;
  int trials = 0;
  double max_rel_err = 0;  // relative to 1e-7 absolute floor
  bool pass = false;
};

// Runs the finite-difference suite over every registered primitive plus the
// two cross-entropy losses. `trials` randomized draws per row; tolerance is
// 1e-4 relative with a 1e-7 absolute floor.
std::vector<GradCheckRow> run_gradient_checks(uint64_t seed, int trials = 20);

bool all_passed(const std::vector<GradCheckRow>& rows);

}  // namespace controlgan
