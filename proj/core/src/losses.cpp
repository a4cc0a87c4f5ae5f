#include "controlgan/losses.hpp"

namespace controlgan {

namespace {

// Saturated sigmoids legitimately hit 0.0 or 1.0 in floating point; the
// clamp below absorbs those. Anything outside [0,1] (or NaN) is not a
// probability and is rejected.
void require_probabilities(const char* what, const Tensor& p) {
  for (real_t v : p.values()) {
    if (!(v >= 0 && v <= 1)) {
      throw std::invalid_argument(std::string(what) +
                                  ": probability outside [0,1]: " + std::to_string(v));
    }
  }
}

}  // namespace

Tensor binary_cross_entropy(real_t target, const Tensor& scores) {
  if (!(target >= 0 && target <= 1)) {
    throw std::invalid_argument("binary_cross_entropy: target outside [0,1]");
  }
  require_probabilities("binary_cross_entropy", scores);
  const Tensor p = clamp(scores, kProbEps, 1 - kProbEps);
  const Tensor log_p = log(p);
  const Tensor log_1p = log(offset(scale(p, -1), 1));  // log(1 - p)
  // -[t * mean(log p) + (1-t) * mean(log(1-p))]
  return scale(add(scale(mean_all(log_p), target),
                   scale(mean_all(log_1p), 1 - target)),
               -1);
}

Tensor multilabel_cross_entropy(const Tensor& labels, const Tensor& probs) {
  if (labels.shape() != probs.shape()) {
    throw shape_error("multilabel_cross_entropy: labels " + labels.shape().str() +
                      " vs probs " + probs.shape().str());
  }
  require_probabilities("multilabel_cross_entropy", probs);
  const Tensor p = clamp(probs, kProbEps, 1 - kProbEps);
  const Tensor one_minus_l = offset(scale(labels, -1), 1);
  const Tensor term = add(mul(labels, log(p)),
                          mul(one_minus_l, log(offset(scale(p, -1), 1))));
  return scale(mean_all(term), -1);
}

}  // namespace controlgan
