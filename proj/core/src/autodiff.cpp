#include "controlgan/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#include "kernels.hpp"

namespace controlgan {

namespace {

thread_local Tape* g_current_tape = nullptr;
std::atomic<uint64_t> g_tape_serial{1};

constexpr std::string_view kOpNames[kOpCount] = {
    "add",     "sub",      "mul",    "scale",    "offset",   "log",
    "sigmoid", "tanh",     "leaky_relu", "clamp", "matmul",  "bias_add",
    "conv2d",  "deconv2d", "avg_pool", "concat", "reshape",  "mean_all",
};

[[noreturn]] void fail_shape(Op op, const std::string& detail) {
  throw shape_error(std::string(op_name(op)) + ": " + detail);
}

void require(bool ok, Op op, const std::string& detail) {
  if (!ok) fail_shape(op, detail);
}

void require_same_shape(Op op, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), op,
          "operand shapes differ: " + a.shape().str() + " vs " + b.shape().str());
}

kern::ConvDims make_conv_dims(Op op, const Shape& xs, const Shape& ks,
                              const OpAttrs& attrs, bool transposed) {
  // Plain conv: x (B,ci,H,W), kernel (co,ci,kh,kw).
  // Transposed conv: x (B,cin,h,w), kernel (cin,cout,kh,kw); geometry is the
  // adjoint of a conv from the (larger) output back to x.
  require(xs.rank() == 4, op, "input must be rank 4 (NCHW), got " + xs.str());
  require(ks.rank() == 4, op, "kernel must be rank 4, got " + ks.str());
  require(attrs.stride >= 1, op, "stride must be >= 1");

  kern::ConvDims d{};
  d.stride = attrs.stride;
  d.kh = ks[2];
  d.kw = ks[3];
  if (!transposed) {
    require(xs[1] == ks[1], op,
            "input channels " + std::to_string(xs[1]) + " != kernel channels " +
                std::to_string(ks[1]) + " (input " + xs.str() + ", kernel " +
                ks.str() + ")");
    d.batch = xs[0];
    d.ci = xs[1];
    d.h = xs[2];
    d.w = xs[3];
    d.co = ks[0];
    d.ho = conv_out_len(d.h, static_cast<int>(d.kh), attrs.stride, attrs.pad);
    d.wo = conv_out_len(d.w, static_cast<int>(d.kw), attrs.stride, attrs.pad);
  } else {
    require(xs[1] == ks[0], op,
            "input channels " + std::to_string(xs[1]) + " != kernel channels " +
                std::to_string(ks[0]) + " (input " + xs.str() + ", kernel " +
                ks.str() + ")");
    // Underlying conv maps the deconv output (B,cout,HO,WO) down to x's
    // spatial size; ConvDims therefore describes that conv.
    const int64_t ho = attrs.pad == Padding::same
                           ? xs[2] * attrs.stride
                           : (xs[2] - 1) * attrs.stride + d.kh;
    const int64_t wo = attrs.pad == Padding::same
                           ? xs[3] * attrs.stride
                           : (xs[3] - 1) * attrs.stride + d.kw;
    d.batch = xs[0];
    d.ci = ks[1];  // deconv out channels = conv input channels
    d.h = ho;
    d.w = wo;
    d.co = ks[0];  // deconv in channels = conv output channels
    d.ho = xs[2];
    d.wo = xs[3];
    require(conv_out_len(d.h, static_cast<int>(d.kh), attrs.stride, attrs.pad) == d.ho &&
                conv_out_len(d.w, static_cast<int>(d.kw), attrs.stride, attrs.pad) == d.wo,
            op, "no valid output geometry for input " + xs.str());
  }
  if (attrs.pad == Padding::same) {
    const int64_t tot_h = std::max<int64_t>(0, (d.ho - 1) * d.stride + d.kh - d.h);
    const int64_t tot_w = std::max<int64_t>(0, (d.wo - 1) * d.stride + d.kw - d.w);
    d.pad_h = tot_h / 2;
    d.pad_w = tot_w / 2;
  } else {
    require(d.h >= d.kh && d.w >= d.kw, op,
            "kernel " + ks.str() + " larger than input " + xs.str());
    d.pad_h = 0;
    d.pad_w = 0;
  }
  return d;
}

Shape infer_shape(Op op, std::span<const Tensor> in, const OpAttrs& attrs) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
      require(in.size() == 2, op, "expects 2 inputs");
      require_same_shape(op, in[0], in[1]);
      return in[0].shape();
    case Op::scale:
    case Op::offset:
    case Op::log:
    case Op::sigmoid:
    case Op::tanh:
    case Op::leaky_relu:
      require(in.size() == 1, op, "expects 1 input");
      return in[0].shape();
    case Op::clamp:
      require(in.size() == 1, op, "expects 1 input");
      require(attrs.a < attrs.b, op, "empty clamp interval");
      return in[0].shape();
    case Op::matmul: {
      require(in.size() == 2, op, "expects 2 inputs");
      const Shape& a = in[0].shape();
      const Shape& b = in[1].shape();
      require(a.rank() == 2 && b.rank() == 2, op,
              "operands must be rank 2, got " + a.str() + " and " + b.str());
      require(a[1] == b[0], op,
              "inner extents differ: " + a.str() + " x " + b.str());
      return Shape{a[0], b[1]};
    }
    case Op::bias_add: {
      require(in.size() == 2, op, "expects 2 inputs");
      const Shape& x = in[0].shape();
      const Shape& b = in[1].shape();
      require(b.rank() == 1, op, "bias must be rank 1, got " + b.str());
      if (x.rank() == 2) {
        require(x[1] == b[0], op,
                "bias length " + std::to_string(b[0]) + " != feature extent of " + x.str());
      } else if (x.rank() == 4) {
        require(x[1] == b[0], op,
                "bias length " + std::to_string(b[0]) + " != channel extent of " + x.str());
      } else {
        fail_shape(op, "input must be rank 2 or 4, got " + x.str());
      }
      return x;
    }
    case Op::conv2d: {
      require(in.size() == 2, op, "expects input and kernel");
      const auto d = make_conv_dims(op, in[0].shape(), in[1].shape(), attrs, false);
      return Shape{d.batch, d.co, d.ho, d.wo};
    }
    case Op::deconv2d: {
      require(in.size() == 2, op, "expects input and kernel");
      const auto d = make_conv_dims(op, in[0].shape(), in[1].shape(), attrs, true);
      return Shape{d.batch, d.ci, d.h, d.w};
    }
    case Op::avg_pool: {
      require(in.size() == 1, op, "expects 1 input");
      const Shape& x = in[0].shape();
      require(x.rank() == 4, op, "input must be rank 4, got " + x.str());
      require(attrs.window >= 1, op, "window must be >= 1");
      require(x[2] % attrs.window == 0 && x[3] % attrs.window == 0, op,
              "extents of " + x.str() + " not divisible by window " +
                  std::to_string(attrs.window));
      return Shape{x[0], x[1], x[2] / attrs.window, x[3] / attrs.window};
    }
    case Op::concat: {
      require(!in.empty(), op, "expects at least 1 input");
      const Shape& first = in[0].shape();
      require(first.rank() == 2, op, "inputs must be rank 2, got " + first.str());
      int64_t total = first[1];
      for (size_t i = 1; i < in.size(); ++i) {
        const Shape& s = in[i].shape();
        require(s.rank() == 2 && s[0] == first[0], op,
                "batch extents differ: " + first.str() + " vs " + s.str());
        total += s[1];
      }
      return Shape{first[0], total};
    }
    case Op::reshape: {
      require(in.size() == 1, op, "expects 1 input");
      require(attrs.target_shape.numel() == in[0].numel(), op,
              "cannot reshape " + in[0].shape().str() + " (" +
                  std::to_string(in[0].numel()) + " elements) to " +
                  attrs.target_shape.str());
      return attrs.target_shape;
    }
    case Op::mean_all:
      require(in.size() == 1, op, "expects 1 input");
      require(in[0].numel() > 0, op, "empty input");
      return Shape{1};
    default:
      throw shape_error("unknown primitive id");
  }
}

void forward_values(Op op, std::span<const Tensor> in, const OpAttrs& attrs,
                    Tensor& out) {
  const auto& x = in[0].values();
  auto& y = out.values_mut();
  switch (op) {
    case Op::add: {
      const auto& b = in[1].values();
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] + b[i];
      break;
    }
    case Op::sub: {
      const auto& b = in[1].values();
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] - b[i];
      break;
    }
    case Op::mul: {
      const auto& b = in[1].values();
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] * b[i];
      break;
    }
    case Op::scale: {
      const real_t c = static_cast<real_t>(attrs.a);
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] * c;
      break;
    }
    case Op::offset: {
      const real_t c = static_cast<real_t>(attrs.a);
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] + c;
      break;
    }
    case Op::log:
      for (size_t i = 0; i < y.size(); ++i) y[i] = std::log(x[i]);
      break;
    case Op::sigmoid:
      for (size_t i = 0; i < y.size(); ++i) y[i] = real_t{1} / (real_t{1} + std::exp(-x[i]));
      break;
    case Op::tanh:
      for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x[i]);
      break;
    case Op::leaky_relu: {
      const real_t slope = static_cast<real_t>(attrs.a);
      for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
      break;
    }
    case Op::clamp: {
      const real_t lo = static_cast<real_t>(attrs.a);
      const real_t hi = static_cast<real_t>(attrs.b);
      for (size_t i = 0; i < y.size(); ++i) y[i] = std::min(hi, std::max(lo, x[i]));
      break;
    }
    case Op::matmul: {
      const Shape& a = in[0].shape();
      const Shape& b = in[1].shape();
      kern::gemm(x.data(), in[1].values().data(), y.data(), a[0], a[1], b[1], false);
      break;
    }
    case Op::bias_add: {
      const auto& b = in[1].values();
      const Shape& xs = in[0].shape();
      if (xs.rank() == 2) {
        const int64_t rows = xs[0], cols = xs[1];
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c) y[r * cols + c] = x[r * cols + c] + b[c];
      } else {
        const int64_t hw = xs[2] * xs[3];
        int64_t idx = 0;
        for (int64_t n = 0; n < xs[0]; ++n)
          for (int64_t c = 0; c < xs[1]; ++c)
            for (int64_t p = 0; p < hw; ++p, ++idx) y[idx] = x[idx] + b[c];
      }
      break;
    }
    case Op::conv2d: {
      const auto d = make_conv_dims(op, in[0].shape(), in[1].shape(), attrs, false);
      kern::conv2d_fwd(d, x.data(), in[1].values().data(), y.data());
      break;
    }
    case Op::deconv2d: {
      const auto d = make_conv_dims(op, in[0].shape(), in[1].shape(), attrs, true);
      std::fill(y.begin(), y.end(), real_t{0});
      kern::conv2d_grad_input(d, x.data(), in[1].values().data(), y.data());
      break;
    }
    case Op::avg_pool: {
      const Shape& xs = in[0].shape();
      kern::avg_pool_fwd(xs[0] * xs[1], xs[2], xs[3], attrs.window, x.data(), y.data());
      break;
    }
    case Op::concat: {
      const int64_t rows = in[0].shape()[0];
      const int64_t out_cols = out.shape()[1];
      int64_t off = 0;
      for (const Tensor& part : in) {
        const int64_t cols = part.shape()[1];
        const auto& v = part.values();
        for (int64_t r = 0; r < rows; ++r) {
          std::memcpy(y.data() + r * out_cols + off, v.data() + r * cols,
                      static_cast<size_t>(cols) * sizeof(real_t));
        }
        off += cols;
      }
      break;
    }
    case Op::reshape:
      y = x;
      break;
    case Op::mean_all: {
      real_t acc = 0;
      for (real_t v : x) acc += v;
      y[0] = acc / static_cast<real_t>(x.size());
      break;
    }
    default:
      throw shape_error("unknown primitive id");
  }
}

// Adds the adjoint contribution of `node` into its inputs' adjoint buffers.
// `want[j]` gates whether input j's gradient is needed at all.
void backward_node(const Tape::Node& node, const Tape& tape,
                   const std::vector<real_t>& g,
                   const std::vector<char>& want,
                   std::vector<std::vector<real_t>>& adj) {
  auto input = [&](size_t j) -> const Tensor& {
    return tape.node(node.inputs[j]).out;
  };
  auto sink = [&](size_t j) -> std::vector<real_t>& {
    auto& buf = adj[static_cast<size_t>(node.inputs[j])];
    if (buf.empty()) buf.assign(input(j).values().size(), 0);
    return buf;
  };

  switch (node.op) {
    case Op::add:
      for (size_t j = 0; j < 2; ++j) {
        if (!want[j]) continue;
        auto& a = sink(j);
        for (size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      }
      break;
    case Op::sub: {
      if (want[0]) {
        auto& a = sink(0);
        for (size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      }
      if (want[1]) {
        auto& b = sink(1);
        for (size_t i = 0; i < g.size(); ++i) b[i] -= g[i];
      }
      break;
    }
    case Op::mul: {
      const auto& xa = input(0).values();
      const auto& xb = input(1).values();
      if (want[0]) {
        auto& a = sink(0);
        for (size_t i = 0; i < g.size(); ++i) a[i] += g[i] * xb[i];
      }
      if (want[1]) {
        auto& b = sink(1);
        for (size_t i = 0; i < g.size(); ++i) b[i] += g[i] * xa[i];
      }
      break;
    }
    case Op::scale: {
      if (!want[0]) break;
      const real_t c = static_cast<real_t>(node.attrs.a);
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += g[i] * c;
      break;
    }
    case Op::offset:
    case Op::reshape: {
      if (!want[0]) break;
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      break;
    }
    case Op::log: {
      if (!want[0]) break;
      const auto& x = input(0).values();
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += g[i] / x[i];
      break;
    }
    case Op::sigmoid: {
      if (!want[0]) break;
      const auto& y = node.out.values();
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += g[i] * y[i] * (real_t{1} - y[i]);
      break;
    }
    case Op::tanh: {
      if (!want[0]) break;
      const auto& y = node.out.values();
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += g[i] * (real_t{1} - y[i] * y[i]);
      break;
    }
    case Op::leaky_relu: {
      if (!want[0]) break;
      const real_t slope = static_cast<real_t>(node.attrs.a);
      const auto& x = input(0).values();
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) a[i] += x[i] > 0 ? g[i] : slope * g[i];
      break;
    }
    case Op::clamp: {
      if (!want[0]) break;
      const real_t lo = static_cast<real_t>(node.attrs.a);
      const real_t hi = static_cast<real_t>(node.attrs.b);
      const auto& x = input(0).values();
      auto& a = sink(0);
      for (size_t i = 0; i < g.size(); ++i) {
        if (x[i] >= lo && x[i] <= hi) a[i] += g[i];
      }
      break;
    }
    case Op::matmul: {
      const Shape& sa = input(0).shape();
      const Shape& sb = input(1).shape();
      if (want[0]) {
        kern::gemm_bt(g.data(), input(1).values().data(), sink(0).data(), sa[0],
                      sb[1], sa[1], true);
      }
      if (want[1]) {
        kern::gemm_at(input(0).values().data(), g.data(), sink(1).data(), sa[1],
                      sa[0], sb[1], true);
      }
      break;
    }
    case Op::bias_add: {
      const Shape& xs = input(0).shape();
      if (want[0]) {
        auto& a = sink(0);
        for (size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      }
      if (want[1]) {
        auto& b = sink(1);
        if (xs.rank() == 2) {
          const int64_t rows = xs[0], cols = xs[1];
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c) b[c] += g[static_cast<size_t>(r * cols + c)];
        } else {
          const int64_t hw = xs[2] * xs[3];
          size_t idx = 0;
          for (int64_t n = 0; n < xs[0]; ++n)
            for (int64_t c = 0; c < xs[1]; ++c)
              for (int64_t p = 0; p < hw; ++p, ++idx) b[c] += g[idx];
        }
      }
      break;
    }
    case Op::conv2d: {
      const auto d = make_conv_dims(node.op, input(0).shape(), input(1).shape(),
                                    node.attrs, false);
      if (want[0]) {
        kern::conv2d_grad_input(d, g.data(), input(1).values().data(), sink(0).data());
      }
      if (want[1]) {
        kern::conv2d_grad_kernel(d, input(0).values().data(), g.data(), sink(1).data());
      }
      break;
    }
    case Op::deconv2d: {
      const auto d = make_conv_dims(node.op, input(0).shape(), input(1).shape(),
                                    node.attrs, true);
      if (want[0]) {
        kern::conv2d_fwd(d, g.data(), input(1).values().data(), sink(0).data(),
                         /*add=*/true);
      }
      if (want[1]) {
        kern::conv2d_grad_kernel(d, g.data(), input(0).values().data(), sink(1).data());
      }
      break;
    }
    case Op::avg_pool: {
      if (!want[0]) break;
      const Shape& xs = input(0).shape();
      kern::avg_pool_grad(xs[0] * xs[1], xs[2], xs[3], node.attrs.window, g.data(),
                          sink(0).data());
      break;
    }
    case Op::concat: {
      const int64_t rows = input(0).shape()[0];
      const int64_t out_cols = node.out.shape()[1];
      int64_t off = 0;
      for (size_t j = 0; j < node.inputs.size(); ++j) {
        const int64_t cols = input(j).shape()[1];
        if (want[j]) {
          auto& a = sink(j);
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c)
              a[static_cast<size_t>(r * cols + c)] +=
                  g[static_cast<size_t>(r * out_cols + off + c)];
        }
        off += cols;
      }
      break;
    }
    case Op::mean_all: {
      if (!want[0]) break;
      auto& a = sink(0);
      const real_t gv = g[0] / static_cast<real_t>(a.size());
      for (auto& v : a) v += gv;
      break;
    }
    default:
      throw shape_error("unknown primitive id");
  }
}

void backward_impl(const Tensor& loss, std::span<const Tensor> only) {
  Tape* tape = Tape::current();
  if (!tape || loss.tape_serial() != tape->serial() || loss.tape_node() < 0) {
    throw std::logic_error("backward: loss is not on the active tape");
  }
  if (loss.numel() != 1) {
    throw shape_error("backward: loss must be scalar, got shape " + loss.shape().str());
  }

  const size_t n = tape->size();
  // Which leaves receive gradient.
  std::vector<char> target_leaf(n, 0);
  if (only.empty()) {
    for (size_t i = 0; i < n; ++i) {
      const auto& nd = tape->node(static_cast<int32_t>(i));
      target_leaf[i] = nd.leaf && nd.out.trainable();
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      const auto& nd = tape->node(static_cast<int32_t>(i));
      if (!nd.leaf) continue;
      for (const Tensor& t : only) {
        if (nd.out.storage_id() == t.storage_id()) {
          target_leaf[i] = 1;
          break;
        }
      }
    }
  }

  // needs[i]: the subgraph under node i contains a target leaf.
  std::vector<char> needs(n, 0);
  for (size_t i = 0; i < n; ++i) {
    const auto& nd = tape->node(static_cast<int32_t>(i));
    if (nd.leaf) {
      needs[i] = target_leaf[i];
    } else {
      for (int32_t in : nd.inputs) {
        if (needs[static_cast<size_t>(in)]) {
          needs[i] = 1;
          break;
        }
      }
    }
  }

  std::vector<std::vector<real_t>> adj(n);
  adj[static_cast<size_t>(loss.tape_node())] = {real_t{1}};

  std::vector<char> want;
  for (size_t iu = n; iu-- > 0;) {
    const auto& nd = tape->node(static_cast<int32_t>(iu));
    auto& g = adj[iu];
    if (g.empty() || !needs[iu]) {
      std::vector<real_t>().swap(g);
      continue;
    }
    if (nd.leaf) {
      if (target_leaf[iu]) {
        // Tensor handles share storage, so accumulating through a const
        // handle is fine; grad_accum allocates on demand.
        auto& acc = const_cast<Tensor&>(nd.out).grad_accum();
        for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
      }
    } else {
      want.assign(nd.inputs.size(), 0);
      for (size_t j = 0; j < nd.inputs.size(); ++j) {
        want[j] = needs[static_cast<size_t>(nd.inputs[j])];
      }
      backward_node(nd, *tape, g, want, adj);
    }
    std::vector<real_t>().swap(g);  // free as we go
  }
}

}  // namespace

std::string_view op_name(Op op) { return kOpNames[static_cast<int>(op)]; }

Op op_from_name(std::string_view name) {
  for (int i = 0; i < kOpCount; ++i) {
    if (kOpNames[i] == name) return static_cast<Op>(i);
  }
  throw std::invalid_argument("unknown primitive id: " + std::string(name));
}

int64_t conv_out_len(int64_t in, int kernel, int stride, Padding pad) {
  if (pad == Padding::same) return (in + stride - 1) / stride;
  return (in - kernel) / stride + 1;
}

Tape::Tape() : serial_(g_tape_serial.fetch_add(1)) {}

Tape::Scope::Scope(Tape& tape) : prev_(g_current_tape) { g_current_tape = &tape; }
Tape::Scope::~Scope() { g_current_tape = prev_; }

Tape* Tape::current() { return g_current_tape; }

int32_t Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int32_t>(nodes_.size() - 1);
}

void Tape::bind(Tensor& t, int32_t node) {
  t.node_ = node;
  t.serial_ = serial_;
}

int32_t Tape::resolve(const Tensor& t) {
  if (t.tape_serial() == serial_ && t.tape_node() >= 0) return t.tape_node();
  auto it = leaves_.find(t.storage_id());
  if (it != leaves_.end()) return it->second;
  Node leaf;
  leaf.op = Op::count_;
  leaf.leaf = true;
  leaf.out = t;
  leaf.reaches_trainable = t.trainable();
  const int32_t id = push(std::move(leaf));
  leaves_.emplace(t.storage_id(), id);
  return id;
}

Tensor apply(Op op, std::span<const Tensor> inputs, const OpAttrs& attrs) {
  const Shape out_shape = infer_shape(op, inputs, attrs);
  Tensor out = Tensor::zeros(out_shape);
  forward_values(op, inputs, attrs, out);

  Tape* tape = Tape::current();
  if (!tape) return out;

  Tape::Node node;
  node.op = op;
  node.attrs = attrs;
  node.inputs.reserve(inputs.size());
  bool reaches = false;
  for (const Tensor& t : inputs) {
    const int32_t id = tape->resolve(t);
    node.inputs.push_back(id);
    reaches = reaches || tape->node(id).reaches_trainable;
  }
  node.out = out;
  node.reaches_trainable = reaches;
  const int32_t id = tape->push(std::move(node));
  tape->bind(out, id);
  return out;
}

void backward(const Tensor& loss) { backward_impl(loss, {}); }

void backward(const Tensor& loss, std::span<const Tensor> only) {
  backward_impl(loss, only);
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Tensor in[] = {a, b};
  return apply(Op::add, in);
}
Tensor sub(const Tensor& a, const Tensor& b) {
  const Tensor in[] = {a, b};
  return apply(Op::sub, in);
}
Tensor mul(const Tensor& a, const Tensor& b) {
  const Tensor in[] = {a, b};
  return apply(Op::mul, in);
}
Tensor scale(const Tensor& x, real_t c) {
  OpAttrs at;
  at.a = c;
  const Tensor in[] = {x};
  return apply(Op::scale, in, at);
}
Tensor offset(const Tensor& x, real_t c) {
  OpAttrs at;
  at.a = c;
  const Tensor in[] = {x};
  return apply(Op::offset, in, at);
}
Tensor log(const Tensor& x) {
  const Tensor in[] = {x};
  return apply(Op::log, in);
}
Tensor sigmoid(const Tensor& x) {
  const Tensor in[] = {x};
  return apply(Op::sigmoid, in);
}
Tensor tanh(const Tensor& x) {
  const Tensor in[] = {x};
  return apply(Op::tanh, in);
}
Tensor leaky_relu(const Tensor& x, real_t slope) {
  OpAttrs at;
  at.a = slope;
  const Tensor in[] = {x};
  return apply(Op::leaky_relu, in, at);
}
Tensor clamp(const Tensor& x, real_t lo, real_t hi) {
  OpAttrs at;
  at.a = lo;
  at.b = hi;
  const Tensor in[] = {x};
  return apply(Op::clamp, in, at);
}
Tensor matmul(const Tensor& a, const Tensor& b) {
  const Tensor in[] = {a, b};
  return apply(Op::matmul, in);
}
Tensor bias_add(const Tensor& x, const Tensor& bias) {
  const Tensor in[] = {x, bias};
  return apply(Op::bias_add, in);
}
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, Padding pad) {
  OpAttrs at;
  at.stride = stride;
  at.pad = pad;
  const Tensor in[] = {x, kernel};
  return apply(Op::conv2d, in, at);
}
Tensor deconv2d(const Tensor& x, const Tensor& kernel, int stride, Padding pad) {
  OpAttrs at;
  at.stride = stride;
  at.pad = pad;
  const Tensor in[] = {x, kernel};
  return apply(Op::deconv2d, in, at);
}
Tensor avg_pool(const Tensor& x, int window) {
  OpAttrs at;
  at.window = window;
  const Tensor in[] = {x};
  return apply(Op::avg_pool, in, at);
}
Tensor concat(std::span<const Tensor> parts, int axis) {
  if (axis != 1) throw shape_error("concat: only axis 1 is supported");
  return apply(Op::concat, parts);
}
Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  const Tensor in[] = {a, b};
  return concat(std::span<const Tensor>(in, 2), axis);
}
Tensor reshape(const Tensor& x, const Shape& target) {
  OpAttrs at;
  at.target_shape = target;
  const Tensor in[] = {x};
  return apply(Op::reshape, in, at);
}
Tensor mean_all(const Tensor& x) {
  const Tensor in[] = {x};
  return apply(Op::mean_all, in);
}

}  // namespace controlgan
