#include "kernels.hpp"

#include <Eigen/Core>

#include <vector>

namespace controlgan::kern {

namespace {

using Mat = Eigen::Matrix<real_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;

// im2col strips are capped so the scratch buffer stays modest even at large
// spatial sizes.
constexpr int64_t kStripRows = 4096;

// Gathers rows [row0, row0+rows) of the im2col matrix for one batch element.
// Row = output position, column = (ci, i, j) flattened.
void im2col_strip(const ConvDims& d, const real_t* x, int64_t row0, int64_t rows,
                  real_t* col) {
  const int64_t kcols = d.ci * d.kh * d.kw;
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t p = row0 + r;
    const int64_t oy = p / d.wo;
    const int64_t ox = p % d.wo;
    real_t* dst = col + r * kcols;
    for (int64_t ci = 0; ci < d.ci; ++ci) {
      const real_t* plane = x + ci * d.h * d.w;
      for (int64_t i = 0; i < d.kh; ++i) {
        const int64_t iy = oy * d.stride + i - d.pad_h;
        for (int64_t j = 0; j < d.kw; ++j, ++dst) {
          const int64_t ix = ox * d.stride + j - d.pad_w;
          *dst = (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                     ? plane[iy * d.w + ix]
                     : real_t{0};
        }
      }
    }
  }
}

// Scatter-adds an im2col strip back into the input planes.
void col2im_strip(const ConvDims& d, const real_t* col, int64_t row0,
                  int64_t rows, real_t* x) {
  const int64_t kcols = d.ci * d.kh * d.kw;
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t p = row0 + r;
    const int64_t oy = p / d.wo;
    const int64_t ox = p % d.wo;
    const real_t* src = col + r * kcols;
    for (int64_t ci = 0; ci < d.ci; ++ci) {
      real_t* plane = x + ci * d.h * d.w;
      for (int64_t i = 0; i < d.kh; ++i) {
        const int64_t iy = oy * d.stride + i - d.pad_h;
        for (int64_t j = 0; j < d.kw; ++j, ++src) {
          const int64_t ix = ox * d.stride + j - d.pad_w;
          if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w) {
            plane[iy * d.w + ix] += *src;
          }
        }
      }
    }
  }
}

}  // namespace

void gemm(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
          int64_t n, bool add) {
  CMap am(a, m, k);
  CMap bm(b, k, n);
  MMap cm(c, m, n);
  if (add) {
    cm.noalias() += am * bm;
  } else {
    cm.noalias() = am * bm;
  }
}

void gemm_bt(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
             int64_t n, bool add) {
  CMap am(a, m, k);
  CMap bm(b, n, k);
  MMap cm(c, m, n);
  if (add) {
    cm.noalias() += am * bm.transpose();
  } else {
    cm.noalias() = am * bm.transpose();
  }
}

void gemm_at(const real_t* a, const real_t* b, real_t* c, int64_t m, int64_t k,
             int64_t n, bool add) {
  CMap am(a, k, m);
  CMap bm(b, k, n);
  MMap cm(c, m, n);
  if (add) {
    cm.noalias() += am.transpose() * bm;
  } else {
    cm.noalias() = am.transpose() * bm;
  }
}

void conv2d_fwd(const ConvDims& d, const real_t* x, const real_t* k, real_t* y,
                bool add) {
  const int64_t pos = d.ho * d.wo;
  const int64_t kcols = d.ci * d.kh * d.kw;
  std::vector<real_t> col(static_cast<size_t>(std::min(pos, kStripRows) * kcols));
  CMap kmap(k, d.co, kcols);
  for (int64_t b = 0; b < d.batch; ++b) {
    const real_t* xb = x + b * d.ci * d.h * d.w;
    real_t* yb = y + b * d.co * pos;
    MMap ymap(yb, d.co, pos);
    for (int64_t row0 = 0; row0 < pos; row0 += kStripRows) {
      const int64_t rows = std::min(kStripRows, pos - row0);
      im2col_strip(d, xb, row0, rows, col.data());
      CMap cmap(col.data(), rows, kcols);
      // y[co, p] = sum_K kernel[co, K] * col[p, K]
      if (add) {
        ymap.middleCols(row0, rows).noalias() += kmap * cmap.transpose();
      } else {
        ymap.middleCols(row0, rows).noalias() = kmap * cmap.transpose();
      }
    }
  }
}

void conv2d_grad_input(const ConvDims& d, const real_t* gy, const real_t* k,
                       real_t* gx) {
  const int64_t pos = d.ho * d.wo;
  const int64_t kcols = d.ci * d.kh * d.kw;
  std::vector<real_t> col(static_cast<size_t>(std::min(pos, kStripRows) * kcols));
  CMap kmap(k, d.co, kcols);
  for (int64_t b = 0; b < d.batch; ++b) {
    const real_t* gyb = gy + b * d.co * pos;
    real_t* gxb = gx + b * d.ci * d.h * d.w;
    CMap gymap(gyb, d.co, pos);
    for (int64_t row0 = 0; row0 < pos; row0 += kStripRows) {
      const int64_t rows = std::min(kStripRows, pos - row0);
      MMap cmap(col.data(), rows, kcols);
      // col[p, K] = sum_co gy[co, p] * kernel[co, K]
      cmap.noalias() = gymap.middleCols(row0, rows).transpose() * kmap;
      col2im_strip(d, col.data(), row0, rows, gxb);
    }
  }
}

void conv2d_grad_kernel(const ConvDims& d, const real_t* x, const real_t* gy,
                        real_t* gk) {
  const int64_t pos = d.ho * d.wo;
  const int64_t kcols = d.ci * d.kh * d.kw;
  std::vector<real_t> col(static_cast<size_t>(std::min(pos, kStripRows) * kcols));
  MMap gkmap(gk, d.co, kcols);
  for (int64_t b = 0; b < d.batch; ++b) {
    const real_t* xb = x + b * d.ci * d.h * d.w;
    const real_t* gyb = gy + b * d.co * pos;
    CMap gymap(gyb, d.co, pos);
    for (int64_t row0 = 0; row0 < pos; row0 += kStripRows) {
      const int64_t rows = std::min(kStripRows, pos - row0);
      im2col_strip(d, xb, row0, rows, col.data());
      CMap cmap(col.data(), rows, kcols);
      gkmap.noalias() += gymap.middleCols(row0, rows) * cmap;
    }
  }
}

void avg_pool_fwd(int64_t planes, int64_t h, int64_t w, int64_t window,
                  const real_t* x, real_t* y) {
  const int64_t ho = h / window;
  const int64_t wo = w / window;
  const real_t inv = real_t{1} / static_cast<real_t>(window * window);
  for (int64_t p = 0; p < planes; ++p) {
    const real_t* xp = x + p * h * w;
    real_t* yp = y + p * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        real_t acc = 0;
        for (int64_t i = 0; i < window; ++i) {
          for (int64_t j = 0; j < window; ++j) {
            acc += xp[(oy * window + i) * w + ox * window + j];
          }
        }
        yp[oy * wo + ox] = acc * inv;
      }
    }
  }
}

void avg_pool_grad(int64_t planes, int64_t h, int64_t w, int64_t window,
                   const real_t* gy, real_t* gx) {
  const int64_t ho = h / window;
  const int64_t wo = w / window;
  const real_t inv = real_t{1} / static_cast<real_t>(window * window);
  for (int64_t p = 0; p < planes; ++p) {
    const real_t* gyp = gy + p * ho * wo;
    real_t* gxp = gx + p * h * w;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        const real_t g = gyp[oy * wo + ox] * inv;
        for (int64_t i = 0; i < window; ++i) {
          for (int64_t j = 0; j < window; ++j) {
            gxp[(oy * window + i) * w + ox * window + j] += g;
          }
        }
      }
    }
  }
}

}  // namespace controlgan::kern
