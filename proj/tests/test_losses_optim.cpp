#include <doctest.h>

#include <cmath>

#include "controlgan/adam.hpp"
#include "controlgan/losses.hpp"

using namespace controlgan;

TEST_CASE("binary cross-entropy: hand-computed values") {
  CHECK(binary_cross_entropy(1, Tensor::scalar(0.5)).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(binary_cross_entropy(1, Tensor::scalar(1 - 1e-7)).item() <= 1e-6);
  const Tensor batch(Shape{2, 1}, {0.9, 0.8});
  CHECK(binary_cross_entropy(1, batch).item() ==
        doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2).epsilon(1e-9));
  CHECK(binary_cross_entropy(1, batch).item() == doctest::Approx(0.164252).epsilon(1e-5));
}

TEST_CASE("binary cross-entropy rejects out-of-range inputs, clamps saturated ones") {
  CHECK_THROWS_AS(binary_cross_entropy(1, Tensor::scalar(-0.01)), std::invalid_argument);
  CHECK_THROWS_AS(binary_cross_entropy(1, Tensor::scalar(1.5)), std::invalid_argument);
  CHECK_THROWS_AS(binary_cross_entropy(1, Tensor::scalar(std::nan(""))), std::invalid_argument);
  CHECK_THROWS_AS(binary_cross_entropy(-0.1, Tensor::scalar(0.5)), std::invalid_argument);
  // Exactly saturated sigmoid outputs are clamped, not rejected.
  CHECK(binary_cross_entropy(1, Tensor::scalar(1.0)).item() <= 1e-6);
  CHECK(std::isfinite(binary_cross_entropy(1, Tensor::scalar(0.0)).item()));
}

TEST_CASE("multi-label cross-entropy: hand-computed values") {
  const Tensor l1(Shape{1, 2}, {1, 0});
  const Tensor p1(Shape{1, 2}, {0.5, 0.5});
  CHECK(multilabel_cross_entropy(l1, p1).item() == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  const Tensor perfect(Shape{1, 2}, {1 - 1e-7, 1e-7});
  CHECK(multilabel_cross_entropy(l1, perfect).item() <= 1e-6);

  const Tensor l2(Shape{1, 4}, {1, 1, 0, 0});
  const Tensor p2(Shape{1, 4}, {0.9, 0.9, 0.1, 0.1});
  CHECK(multilabel_cross_entropy(l2, p2).item() == doctest::Approx(0.105361).epsilon(1e-5));
  CHECK(multilabel_cross_entropy(l2, p2).item() == doctest::Approx(-std::log(0.9)).epsilon(1e-9));
}

TEST_CASE("label-flip symmetry: loss(1, p) == loss(0, 1-p)") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const real_t p = rng.uniform_open(static_cast<real_t>(1e-6), static_cast<real_t>(1 - 1e-6));
    const real_t a = binary_cross_entropy(1, Tensor::scalar(p)).item();
    const real_t b = binary_cross_entropy(0, Tensor::scalar(1 - p)).item();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("multi-label loss is permutation-equivariant over the label axis") {
  Rng rng(32);
  for (int t = 0; t < 20; ++t) {
    std::vector<real_t> lv(8), pv(8);
    for (auto& e : lv) e = static_cast<real_t>(rng.bounded(2));
    for (auto& e : pv) e = rng.uniform_open(static_cast<real_t>(0.01), static_cast<real_t>(0.99));
    const Tensor l(Shape{2, 4}, lv);
    const Tensor p(Shape{2, 4}, pv);
    // Rotate the label axis by one in both tensors.
    std::vector<real_t> lr(8), pr(8);
    for (int r = 0; r < 2; ++r) {
      for (int k = 0; k < 4; ++k) {
        lr[static_cast<size_t>(r * 4 + (k + 1) % 4)] = lv[static_cast<size_t>(r * 4 + k)];
        pr[static_cast<size_t>(r * 4 + (k + 1) % 4)] = pv[static_cast<size_t>(r * 4 + k)];
      }
    }
    const real_t a = multilabel_cross_entropy(l, p).item();
    const real_t b = multilabel_cross_entropy(Tensor(Shape{2, 4}, lr), Tensor(Shape{2, 4}, pr)).item();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("log clamp keeps losses finite near saturation") {
  const real_t v = binary_cross_entropy(1, Tensor::scalar(1e-9)).item();
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
}

TEST_CASE("adam: hand-evaluated first step") {
  ParamSet ps;
  ps.add("w", Tensor::scalar(1.0));
  AdamState adam = AdamState::init(ps, static_cast<real_t>(1e-3));
  ps.at("w").grad_accum()[0] = 1.0;
  adam.apply(ps);
  // m=0.1, v=1e-3; bias-corrected m_hat=1, v_hat=1 -> step = lr/(1 + eps).
  const real_t expected = static_cast<real_t>(1.0 - 1e-3 / (1.0 + 1e-8));
  CHECK(ps.at("w").values()[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(adam.step_count == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamSet ps;
  ps.add("w", Tensor(Shape{3}, {1, -2, 3}));
  AdamState adam = AdamState::init(ps, static_cast<real_t>(1e-3));
  ps.at("w").grad_accum();  // all zeros
  adam.apply(ps);
  CHECK(ps.at("w").values() == std::vector<real_t>{1, -2, 3});
}

TEST_CASE("adam: identical parameters with identical gradients move identically") {
  ParamSet ps;
  ps.add("a", Tensor::scalar(0.7));
  ps.add("b", Tensor::scalar(0.7));
  AdamState adam = AdamState::init(ps, static_cast<real_t>(1e-3));
  for (int step = 0; step < 5; ++step) {
    ps.at("a").grad_accum()[0] = static_cast<real_t>(0.3 * (step + 1));
    ps.at("b").grad_accum()[0] = static_cast<real_t>(0.3 * (step + 1));
    adam.apply(ps);
    CHECK(ps.at("a").values()[0] == ps.at("b").values()[0]);
  }
}

TEST_CASE("adam: missing gradient is rejected") {
  ParamSet ps;
  ps.add("w", Tensor::scalar(1.0));
  AdamState adam = AdamState::init(ps, static_cast<real_t>(1e-3));
  CHECK_THROWS_WITH_AS(adam.apply(ps), doctest::Contains("w"), std::invalid_argument);
}
