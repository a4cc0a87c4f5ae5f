#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace controlgan {

// Scalar precision: 64-bit by default. Building with CTRLGAN_REAL32 switches
// the whole stack to 32-bit; gradient checks and the test suites assume the
// 64-bit build.
#ifdef CTRLGAN_REAL32
using real_t = float;
#else
using real_t = double;
#endif

// Multi-label condition vector. Binary {0,1} in training data, arbitrary
// reals at generation time (interpolation / extrapolation).
using LabelVector = std::vector<real_t>;

struct Shape {
  std::vector<int64_t> d;

  Shape() = default;
  Shape(std::initializer_list<int64_t> dims) : d(dims) {}
  explicit Shape(std::vector<int64_t> dims) : d(std::move(dims)) {}

  int64_t numel() const;
  size_t rank() const { return d.size(); }
  int64_t operator[](size_t i) const { return d[i]; }
  bool operator==(const Shape&) const = default;
  std::string str() const;  // e.g. "2x3x4"
};

struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a training step produces a non-finite loss. The CLI writes an
// abort checkpoint and exits with code 2.
struct numeric_abort : std::runtime_error {
  int64_t iteration;
  numeric_abort(const std::string& what, int64_t iter)
      : std::runtime_error(what), iteration(iter) {}
};

}  // namespace controlgan
