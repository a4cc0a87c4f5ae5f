#include "controlgan/gradcheck.hpp"

#include <cmath>

#include "controlgan/losses.hpp"

namespace controlgan {

std::vector<real_t> finite_difference_gradient(
    const std::function<real_t(const Tensor&)>& f, const Tensor& x, real_t eps) {
  if (!(eps > 0)) throw std::invalid_argument("finite_difference_gradient: eps must be > 0");
  Tensor probe = x.clone();
  auto& v = probe.values_mut();
  std::vector<real_t> grad(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const real_t saved = v[i];
    v[i] = saved + eps;
    const real_t hi = f(probe);
    v[i] = saved - eps;
    const real_t lo = f(probe);
    v[i] = saved;
    grad[i] = (hi - lo) / (2 * eps);
  }
  return grad;
}

namespace {

constexpr real_t kFdEps = static_cast<real_t>(1e-5);
constexpr double kRelTol = 1e-4;
constexpr double kAbsFloor = 1e-7;

Tensor rand_tensor(Rng& rng, const Shape& shape, real_t lo, real_t hi) {
  std::vector<real_t> v(static_cast<size_t>(shape.numel()));
  for (auto& e : v) e = rng.uniform_open(lo, hi);
  return Tensor(shape, std::move(v));
}

// Uniform draw avoiding a margin around the listed kink points.
Tensor rand_tensor_avoiding(Rng& rng, const Shape& shape, real_t lo, real_t hi,
                            std::initializer_list<real_t> kinks, real_t margin) {
  std::vector<real_t> v(static_cast<size_t>(shape.numel()));
  for (auto& e : v) {
    for (;;) {
      const real_t c = rng.uniform_open(lo, hi);
      bool ok = true;
      for (real_t k : kinks) ok = ok && std::abs(c - k) > margin;
      if (ok) {
        e = c;
        break;
      }
    }
  }
  return Tensor(shape, std::move(v));
}

struct CheckCase {
  std::vector<Tensor> inputs;
  std::function<Tensor(std::span<const Tensor>)> build;  // inputs -> scalar
};

// Compares analytic and finite-difference gradients for every input of the
// case; returns the worst error normalized by the tolerance denominator.
double run_case(CheckCase cs, bool& pass) {
  for (auto& t : cs.inputs) t.set_trainable(true);

  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor loss = cs.build(cs.inputs);
    backward(loss);
  }

  double worst = 0;
  for (size_t j = 0; j < cs.inputs.size(); ++j) {
    const auto& analytic = cs.inputs[j].grad();
    auto f = [&](const Tensor& xj) -> real_t {
      std::vector<Tensor> ins = cs.inputs;
      ins[j] = xj;
      return cs.build(ins).item();
    };
    const auto fd = finite_difference_gradient(f, cs.inputs[j], kFdEps);
    for (size_t i = 0; i < fd.size(); ++i) {
      const double a = analytic[i];
      const double d = fd[i];
      const double m = std::max(std::abs(a), std::abs(d));
      const double err = std::abs(a - d);
      if (err > std::max(kAbsFloor, kRelTol * m)) pass = false;
      worst = std::max(worst, err / std::max(m, kAbsFloor / kRelTol));
    }
  }
  return worst;
}

// Scalar-valued wrapper around an op output: weighting by a fixed random
// tensor before the mean catches layout and permutation mistakes that a
// plain mean would not.
std::function<Tensor(std::span<const Tensor>)> weighted(
    Rng& rng, const Shape& out_shape,
    std::function<Tensor(std::span<const Tensor>)> op) {
  Tensor w = rand_tensor(rng, out_shape, -1, 1);
  return [w, op = std::move(op)](std::span<const Tensor> in) {
    return mean_all(mul(op(in), w));
  };
}

CheckCase make_case(Op op, Rng& rng, int trial) {
  CheckCase cs;
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul: {
      const Shape s{2, 3};
      cs.inputs = {rand_tensor(rng, s, -2, 2), rand_tensor(rng, s, -2, 2)};
      cs.build = weighted(rng, s, [op](std::span<const Tensor> in) {
        return apply(op, in);
      });
      break;
    }
    case Op::scale:
    case Op::offset: {
      const Shape s{7};
      OpAttrs at;
      at.a = rng.uniform_open(-2, 2);
      cs.inputs = {rand_tensor(rng, s, -2, 2)};
      cs.build = weighted(rng, s, [op, at](std::span<const Tensor> in) {
        return apply(op, in, at);
      });
      break;
    }
    case Op::log: {
      const Shape s{6};
      cs.inputs = {rand_tensor(rng, s, static_cast<real_t>(0.2), static_cast<real_t>(2.5))};
      cs.build = weighted(rng, s, [](std::span<const Tensor> in) {
        return apply(Op::log, in);
      });
      break;
    }
    case Op::sigmoid:
    case Op::tanh: {
      const Shape s{2, 4};
      cs.inputs = {rand_tensor(rng, s, -3, 3)};
      cs.build = weighted(rng, s, [op](std::span<const Tensor> in) {
        return apply(op, in);
      });
      break;
    }
    case Op::leaky_relu: {
      const Shape s{3, 4};
      OpAttrs at;
      at.a = 0.1;
      cs.inputs = {rand_tensor_avoiding(rng, s, -2, 2, {0}, static_cast<real_t>(0.05))};
      cs.build = weighted(rng, s, [at](std::span<const Tensor> in) {
        return apply(Op::leaky_relu, in, at);
      });
      break;
    }
    case Op::clamp: {
      const Shape s{8};
      OpAttrs at;
      at.a = -0.8;
      at.b = 0.9;
      cs.inputs = {rand_tensor_avoiding(rng, s, -2, 2,
                                        {static_cast<real_t>(-0.8), static_cast<real_t>(0.9)},
                                        static_cast<real_t>(0.05))};
      cs.build = weighted(rng, s, [at](std::span<const Tensor> in) {
        return apply(Op::clamp, in, at);
      });
      break;
    }
    case Op::matmul: {
      cs.inputs = {rand_tensor(rng, Shape{3, 4}, -1, 1), rand_tensor(rng, Shape{4, 2}, -1, 1)};
      cs.build = weighted(rng, Shape{3, 2}, [](std::span<const Tensor> in) {
        return apply(Op::matmul, in);
      });
      break;
    }
    case Op::bias_add: {
      if (trial % 2 == 0) {
        cs.inputs = {rand_tensor(rng, Shape{3, 5}, -1, 1), rand_tensor(rng, Shape{5}, -1, 1)};
        cs.build = weighted(rng, Shape{3, 5}, [](std::span<const Tensor> in) {
          return apply(Op::bias_add, in);
        });
      } else {
        cs.inputs = {rand_tensor(rng, Shape{2, 3, 4, 4}, -1, 1), rand_tensor(rng, Shape{3}, -1, 1)};
        cs.build = weighted(rng, Shape{2, 3, 4, 4}, [](std::span<const Tensor> in) {
          return apply(Op::bias_add, in);
        });
      }
      break;
    }
    case Op::conv2d: {
      OpAttrs at;
      at.stride = (trial % 2) + 1;
      at.pad = (trial % 4 < 2) ? Padding::same : Padding::valid;
      cs.inputs = {rand_tensor(rng, Shape{2, 3, 6, 5}, -1, 1),
                   rand_tensor(rng, Shape{2, 3, 3, 3}, -1, 1)};
      const Tensor in0[] = {cs.inputs[0], cs.inputs[1]};
      const Shape out = apply(Op::conv2d, in0, at).shape();
      cs.build = weighted(rng, out, [at](std::span<const Tensor> in) {
        return apply(Op::conv2d, in, at);
      });
      break;
    }
    case Op::deconv2d: {
      OpAttrs at;
      at.stride = (trial % 2) + 1;
      at.pad = (trial % 4 < 2) ? Padding::same : Padding::valid;
      cs.inputs = {rand_tensor(rng, Shape{2, 3, 3, 4}, -1, 1),
                   rand_tensor(rng, Shape{3, 2, 3, 3}, -1, 1)};
      const Tensor in0[] = {cs.inputs[0], cs.inputs[1]};
      const Shape out = apply(Op::deconv2d, in0, at).shape();
      cs.build = weighted(rng, out, [at](std::span<const Tensor> in) {
        return apply(Op::deconv2d, in, at);
      });
      break;
    }
    case Op::avg_pool: {
      OpAttrs at;
      at.window = 2;
      cs.inputs = {rand_tensor(rng, Shape{2, 3, 4, 6}, -1, 1)};
      cs.build = weighted(rng, Shape{2, 3, 2, 3}, [at](std::span<const Tensor> in) {
        return apply(Op::avg_pool, in, at);
      });
      break;
    }
    case Op::concat: {
      cs.inputs = {rand_tensor(rng, Shape{2, 2}, -1, 1), rand_tensor(rng, Shape{2, 3}, -1, 1),
                   rand_tensor(rng, Shape{2, 1}, -1, 1)};
      cs.build = weighted(rng, Shape{2, 6}, [](std::span<const Tensor> in) {
        return apply(Op::concat, in);
      });
      break;
    }
    case Op::reshape: {
      OpAttrs at;
      at.target_shape = Shape{3, 4};
      cs.inputs = {rand_tensor(rng, Shape{2, 6}, -1, 1)};
      cs.build = weighted(rng, Shape{3, 4}, [at](std::span<const Tensor> in) {
        return apply(Op::reshape, in, at);
      });
      break;
    }
    case Op::mean_all: {
      cs.inputs = {rand_tensor(rng, Shape{3, 4}, -2, 2)};
      cs.build = [](std::span<const Tensor> in) { return apply(Op::mean_all, in); };
      break;
    }
    default:
      throw std::logic_error("make_case: unhandled op");
  }
  return cs;
}

CheckCase make_loss_case(bool multilabel, Rng& rng) {
  CheckCase cs;
  if (!multilabel) {
    const real_t targets[] = {0, static_cast<real_t>(0.37), 1};
    const real_t t = targets[rng.bounded(3)];
    cs.inputs = {rand_tensor(rng, Shape{5, 1}, -3, 3)};
    cs.build = [t](std::span<const Tensor> in) {
      return binary_cross_entropy(t, sigmoid(in[0]));
    };
  } else {
    const Shape s{4, 3};
    std::vector<real_t> lv(static_cast<size_t>(s.numel()));
    for (auto& e : lv) e = static_cast<real_t>(rng.bounded(2));
    Tensor labels(s, std::move(lv));
    cs.inputs = {rand_tensor(rng, s, -3, 3)};
    cs.build = [labels](std::span<const Tensor> in) {
      return multilabel_cross_entropy(labels, sigmoid(in[0]));
    };
  }
  return cs;
}

}  // namespace

std::vector<GradCheckRow> run_gradient_checks(uint64_t seed, int trials) {
  Rng rng(seed);
  std::vector<GradCheckRow> rows;

  for (int opi = 0; opi < kOpCount; ++opi) {
    const Op op = static_cast<Op>(opi);
    GradCheckRow row;
    row.name = std::string(op_name(op));
    row.trials = trials;
    row.pass = true;
    for (int t = 0; t < trials; ++t) {
      row.max_rel_err = std::max(row.max_rel_err, run_case(make_case(op, rng, t), row.pass));
    }
    rows.push_back(std::move(row));
  }

  for (bool multilabel : {false, true}) {
    GradCheckRow row;
    row.name = multilabel ? "multilabel_cross_entropy" : "binary_cross_entropy";
    row.trials = trials;
    row.pass = true;
    for (int t = 0; t < trials; ++t) {
      row.max_rel_err = std::max(row.max_rel_err, run_case(make_loss_case(multilabel, rng), row.pass));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool all_passed(const std::vector<GradCheckRow>& rows) {
  for (const auto& r : rows) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace controlgan
