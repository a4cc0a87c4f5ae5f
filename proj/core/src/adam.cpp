#include "controlgan/adam.hpp"

#include <cmath>

namespace controlgan {

AdamState AdamState::init(const ParamSet& params, real_t lr_) {
  AdamState st;
  st.lr = lr_;
  st.slots.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const size_t n = params.entries[i].second.values().size();
    st.slots[i].m.assign(n, 0);
    st.slots[i].v.assign(n, 0);
  }
  return st;
}

void AdamState::apply(ParamSet& params) {
  if (slots.size() != params.size()) {
    throw std::invalid_argument("adam: state built for a different parameter set");
  }
  ++step_count;
  const real_t bc1 = 1 - std::pow(beta1, static_cast<real_t>(step_count));
  const real_t bc2 = 1 - std::pow(beta2, static_cast<real_t>(step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params.entries[i];
    if (!p.has_grad()) {
      throw std::invalid_argument("adam: missing gradient for parameter " + name);
    }
    const auto& g = p.grad();
    auto& m = slots[i].m;
    auto& v = slots[i].v;
    auto& w = p.values_mut();
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1 * m[j] + (1 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1 - beta2) * g[j] * g[j];
      const real_t m_hat = m[j] / bc1;
      const real_t v_hat = v[j] / bc2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_hat);
    }
  }
}

}  // namespace controlgan
