#pragma once

#include "controlgan/autodiff.hpp"

namespace controlgan {

// Probabilities are pulled into [kProbEps, 1 - kProbEps] before any log so
// both losses stay finite even when a sigmoid saturates.
inline constexpr real_t kProbEps = static_cast<real_t>(1e-7);

// Mean binary cross-entropy of a batch of scores against one scalar target
// t in [0,1]:  -[t log p + (1-t) log(1-p)], averaged over the batch.
// Drives the discriminator objective (real/fake targets) and the
// adversarial term of the generator objective.
Tensor binary_cross_entropy(real_t target, const Tensor& scores);

// Multi-label form: labels and probs are (batch, label_dim); the per-label
// binary cross-entropies are averaged over batch and labels.
Tensor multilabel_cross_entropy(const Tensor& labels, const Tensor& probs);

}  // namespace controlgan
