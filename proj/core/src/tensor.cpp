#include "controlgan/tensor.hpp"

#include <cstring>

namespace controlgan {

Tensor::Tensor(Shape shape, std::vector<real_t> values) {
  if (shape.numel() != static_cast<int64_t>(values.size())) {
    throw shape_error("tensor: shape " + shape.str() + " expects " +
                      std::to_string(shape.numel()) + " values, got " +
                      std::to_string(values.size()));
  }
  st_ = std::make_shared<Storage>();
  st_->shape = std::move(shape);
  st_->v = std::move(values);
}

Tensor Tensor::zeros(const Shape& shape) {
  return Tensor(shape, std::vector<real_t>(static_cast<size_t>(shape.numel()), 0));
}

Tensor Tensor::full(const Shape& shape, real_t value) {
  return Tensor(shape, std::vector<real_t>(static_cast<size_t>(shape.numel()), value));
}

Tensor Tensor::scalar(real_t value) { return Tensor(Shape{1}, {value}); }

real_t Tensor::item() const {
  if (numel() != 1) {
    throw shape_error("item: tensor has shape " + shape().str() + ", expected a single element");
  }
  return st_->v[0];
}

Tensor Tensor::clone() const {
  Tensor out;
  if (st_) {
    out.st_ = std::make_shared<Storage>();
    out.st_->shape = st_->shape;
    out.st_->v = st_->v;
    out.st_->trainable = st_->trainable;
  }
  return out;
}

Tensor& Tensor::set_trainable(bool t) {
  st_->trainable = t;
  return *this;
}

const std::vector<real_t>& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("grad: no gradient present");
  return *st_->g;
}

std::vector<real_t>& Tensor::grad_accum() {
  if (!st_->g) st_->g = std::make_unique<std::vector<real_t>>(st_->v.size(), 0);
  return *st_->g;
}

void Tensor::zero_grad() {
  if (st_ && st_->g) std::memset(st_->g->data(), 0, st_->g->size() * sizeof(real_t));
}

void Tensor::drop_grad() {
  if (st_) st_->g.reset();
}

}  // namespace controlgan
