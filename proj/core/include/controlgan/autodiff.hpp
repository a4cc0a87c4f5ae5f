#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "controlgan/tensor.hpp"

namespace controlgan {

// Primitive set. Sufficient for the strided/residual conv architectures,
// the fully-connected collapse used in vector mode, and both cross-entropy
// losses built on top.
enum class Op : uint8_t {
  add,
  sub,
  mul,
  scale,       // x * attrs.a
  offset,      // x + attrs.a
  log,
  sigmoid,
  tanh,
  leaky_relu,  // slope attrs.a on the negative side
  clamp,       // [attrs.a, attrs.b], zero gradient outside
  matmul,      // (m,k) x (k,n)
  bias_add,    // (B,F)+(F) or (B,C,H,W)+(C)
  conv2d,      // NCHW, kernel (co,ci,kh,kw)
  deconv2d,    // NCHW, kernel (ci,co,kh,kw); adjoint of conv2d
  avg_pool,    // window w, stride w
  concat,      // rank-2, axis 1
  reshape,
  mean_all,    // full reduction to a 1-element tensor
  count_
};

constexpr int kOpCount = static_cast<int>(Op::count_);

std::string_view op_name(Op op);
Op op_from_name(std::string_view name);  // throws on unknown id

enum class Padding : uint8_t { same, valid };

struct OpAttrs {
  double a = 0;
  double b = 0;
  int stride = 1;
  int window = 2;
  Padding pad = Padding::same;
  Shape target_shape;  // reshape only
};

// Output spatial length of a convolution along one axis.
int64_t conv_out_len(int64_t in, int kernel, int stride, Padding pad);

// One tape records one training step's graph and is discarded after
// backward. Never shared across threads; `Tape::Scope` installs the tape as
// the thread's recording target.
class Tape {
 public:
  struct Node {
    Op op;
    OpAttrs attrs;
    std::vector<int32_t> inputs;
    Tensor out;          // leaf nodes: the watched tensor itself
    bool leaf = false;
    bool reaches_trainable = false;
  };

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* current();

  size_t size() const { return nodes_.size(); }
  const Node& node(int32_t i) const { return nodes_[static_cast<size_t>(i)]; }
  uint64_t serial() const { return serial_; }

  // Node id for a tensor: its recorded node if it lives on this tape,
  // otherwise a (deduplicated) leaf.
  int32_t resolve(const Tensor& t);

  // Marks a tensor as the output of `node` on this tape.
  void bind(Tensor& t, int32_t node);

 private:
  friend Tensor apply(Op, std::span<const Tensor>, const OpAttrs&);
  friend void backward(const Tensor&, std::span<const Tensor>);

  int32_t push(Node n);

  std::vector<Node> nodes_;
  std::unordered_map<const void*, int32_t> leaves_;
  uint64_t serial_;
};

// Validates shapes against the primitive's rule, computes the forward
// value, and records the node on the active tape (if any; without a tape
// the result is a detached tensor).
Tensor apply(Op op, std::span<const Tensor> inputs, const OpAttrs& attrs = {});

// Populates .grad on every trainable leaf reachable from `loss`.
// Accumulation across fan-out is additive; the walk order is the reverse of
// creation order, so identical tapes give bit-identical gradients.
void backward(const Tensor& loss);

// Same, but gradients are accumulated only into the listed tensors; other
// branches are skipped where possible.
void backward(const Tensor& loss, std::span<const Tensor> only);

// Convenience wrappers.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, real_t c);
Tensor offset(const Tensor& x, real_t c);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor leaky_relu(const Tensor& x, real_t slope);
Tensor clamp(const Tensor& x, real_t lo, real_t hi);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor bias_add(const Tensor& x, const Tensor& bias);
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, Padding pad);
Tensor deconv2d(const Tensor& x, const Tensor& kernel, int stride, Padding pad);
Tensor avg_pool(const Tensor& x, int window);
Tensor concat(std::span<const Tensor> parts, int axis = 1);
Tensor concat(const Tensor& a, const Tensor& b, int axis = 1);
Tensor reshape(const Tensor& x, const Shape& target);
Tensor mean_all(const Tensor& x);

}  // namespace controlgan
