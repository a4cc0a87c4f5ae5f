#pragma once

#include <memory>
#include <vector>

#include "controlgan/types.hpp"

namespace controlgan {

class Tape;

// Dense real array with value semantics over shared storage: copies alias
// the same buffer, which is what lets a parameter tensor held by a ParamSet
// and the same tensor recorded as a tape leaf see one gradient.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<real_t> values);

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, real_t value);
  static Tensor scalar(real_t value);

  bool defined() const { return st_ != nullptr; }
  const Shape& shape() const { return st_->shape; }
  int64_t numel() const { return static_cast<int64_t>(st_->v.size()); }

  const std::vector<real_t>& values() const { return st_->v; }
  std::vector<real_t>& values_mut() { return st_->v; }
  real_t item() const;  // requires numel == 1

  // Deep copy of values; detached, grad dropped.
  Tensor clone() const;

  // Trainable tensors receive gradient when used as tape leaves.
  bool trainable() const { return st_->trainable; }
  Tensor& set_trainable(bool t);

  bool has_grad() const { return st_ && st_->g != nullptr; }
  const std::vector<real_t>& grad() const;
  // Gradient buffer, allocated and zeroed on first use.
  std::vector<real_t>& grad_accum();
  void zero_grad();
  void drop_grad();

  // Identity of the underlying buffer (leaf deduplication on the tape).
  const void* storage_id() const { return st_.get(); }

  int32_t tape_node() const { return node_; }
  uint64_t tape_serial() const { return serial_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<real_t> v;
    std::unique_ptr<std::vector<real_t>> g;
    bool trainable = false;
  };

  std::shared_ptr<Storage> st_;
  int32_t node_ = -1;    // index into the recording tape, -1 when detached
  uint64_t serial_ = 0;  // which tape instance node_ refers to

  friend class Tape;
};

}  // namespace controlgan
