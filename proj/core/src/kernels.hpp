#pragma once

// Internal dense kernels behind the tensor primitives. Not installed.

#include <cstdint>

#include "controlgan/types.hpp"

namespace controlgan::kern {

// C (m x n) = A (m x k) * B (k x n), row-major; accumulates when add is set.
void gemm(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
          int64_t n, bool add);
// C (m x n) = A (m x k) * B' (n x k), i.e. B transposed.
void gemm_bt(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
             int64_t n, bool add);
// C (m x n) = A' (k x m) * B (k x n), i.e. A transposed.
void gemm_at(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
             int64_t n, bool add);

// Geometry of one conv2d application, padding already resolved.
struct ConvDims {
  int64_t batch;
  int64_t ci, h, w;    // input planes
  int64_t co, kh, kw;  // kernel
  int64_t stride;
  int64_t ho, wo;      // output planes
  int64_t pad_h, pad_w;  // top / left zero padding
};

void conv2d_fwd(const ConvDims& d, const real_t* x, const real_t* k, real_t* y,
                bool add = false);
// gx += adjoint scatter of gy through the kernel. gx must be sized (and
// zeroed by the caller when used as a forward deconv).
void conv2d_grad_input(const ConvDims& d, const real_t* gy, const real_t* k,
                       real_t* gx);
// gk += correlation of x with gy.
void conv2d_grad_kernel(const ConvDims& d, const real_t* x, const real_t* gy,
                        real_t* gk);

void avg_pool_fwd(int64_t planes, int64_t h, int64_t w, int64_t window,
                  const real_t* x, real_t* y);
void avg_pool_grad(int64_t planes, int64_t h, int64_t w, int64_t window,
                   const real_t* gy, real_t* gx);

}  // namespace controlgan::kern
