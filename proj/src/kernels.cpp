/*
 * Copyright 2026 The PushPull Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pushpull/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pushpull::kernels {

namespace {

constexpr std::size_t kColumnBlock = 256;

struct ConvDims {
  std::size_t n, in_c, h, w;
  std::size_t out_c, kh, kw;
  std::size_t oh, ow;
  std::size_t k() const { return in_c * kh * kw; }
  std::size_t p() const { return oh * ow; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& w, ConvGeometry g) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d kernel");
  if (g.stride == 0) throw ContractError("conv2d: stride must be positive");
  if (x.dim(1) != w.dim(1)) {
    throw DimensionError("conv2d: input has " + std::to_string(x.dim(1)) +
                         " channels but kernel expects " + std::to_string(w.dim(1)));
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), 0, 0};
  d.oh = conv_output_extent(d.h, d.kh, g.stride, g.padding);
  d.ow = conv_output_extent(d.w, d.kw, g.stride, g.padding);
  return d;
}

// Unfolds one sample into a (I*kh*kw) x (oh*ow) matrix.
template <typename T>
void im2col(const T* x, const ConvDims& d, ConvGeometry g, T* col) {
  const std::size_t p = d.p();
  for (std::size_t c = 0; c < d.in_c; ++c) {
    const T* plane = x + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        T* row = col + ((c * d.kh + ky) * d.kw + kx) * p;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          T* out = row + oy * d.ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(out, out + d.ow, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w))
                          ? T{0}
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_accumulate(const T* col, const ConvDims& d, ConvGeometry g, T* dx) {
  const std::size_t p = d.p();
  for (std::size_t c = 0; c < d.in_c; ++c) {
    T* plane = dx + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        const T* row = col + ((c * d.kh + ky) * d.kw + kx) * p;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * d.w;
          const T* src = row + oy * d.ow;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            dst[static_cast<std::size_t>(ix)] += src[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvDims& d, ConvGeometry g) {
  return d.kh == 1 && d.kw == 1 && g.stride == 1 && g.padding == 0;
}

// out[O x P] += a[O x K] * b[K x P]
template <typename T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t o_n, std::size_t k_n,
             std::size_t p_n) {
  for (std::size_t p0 = 0; p0 < p_n; p0 += kColumnBlock) {
    const std::size_t p1 = std::min(p_n, p0 + kColumnBlock);
    for (std::size_t o = 0; o < o_n; ++o) {
      T* out_row = out + o * p_n;
      const T* a_row = a + o * k_n;
      for (std::size_t k = 0; k < k_n; ++k) {
        const T scale = a_row[k];
        const T* b_row = b + k * p_n;
        for (std::size_t p = p0; p < p1; ++p) out_row[p] += scale * b_row[p];
      }
    }
  }
}

// out[K x P] += a[O x K]^T * b[O x P]
template <typename T>
void gemm_tn(const T* a, const T* b, T* out, std::size_t o_n, std::size_t k_n,
             std::size_t p_n) {
  for (std::size_t p0 = 0; p0 < p_n; p0 += kColumnBlock) {
    const std::size_t p1 = std::min(p_n, p0 + kColumnBlock);
    for (std::size_t o = 0; o < o_n; ++o) {
      const T* b_row = b + o * p_n;
      for (std::size_t k = 0; k < k_n; ++k) {
        const T scale = a[o * k_n + k];
        T* out_row = out + k * p_n;
        for (std::size_t p = p0; p < p1; ++p) out_row[p] += scale * b_row[p];
      }
    }
  }
}

// Fixed-order dot product with eight independent lanes.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  for (std::size_t j = 0; i < n; ++i, ++j) lanes[j] += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
         ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

// out[O x K] += a[O x P] * b[K x P]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* out, std::size_t o_n, std::size_t k_n,
             std::size_t p_n) {
  for (std::size_t o = 0; o < o_n; ++o) {
    for (std::size_t k = 0; k < k_n; ++k) {
      out[o * k_n + k] += dot(a + o * p_n, b + k * p_n, p_n);
    }
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw ContractError("stride must be positive");
  if (extent + 2 * padding < kernel) {
    throw DimensionError("kernel extent " + std::to_string(kernel) +
                         " exceeds padded input extent " +
                         std::to_string(extent + 2 * padding));
  }
  return (extent + 2 * padding - kernel) / stride + 1;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, ConvGeometry g) {
  const ConvDims d = conv_dims(x, w, g);
  Tensor<T> y({d.n, d.out_c, d.oh, d.ow});
  const std::size_t k = d.k();
  const std::size_t p = d.p();
  const bool pointwise = is_pointwise(d, g);
  std::vector<T> col(pointwise ? 0 : k * p);
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* xn = x.data().data() + n * d.in_c * d.h * d.w;
    const T* b = xn;
    if (!pointwise) {
      im2col(xn, d, g, col.data());
      b = col.data();
    }
    gemm_nn(w.data().data(), b, y.data().data() + n * d.out_c * p, d.out_c, k, p);
  }
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                     ConvGeometry g, Tensor<T>* dx, Tensor<T>* dw) {
  const ConvDims d = conv_dims(x, w, g);
  if (dy.shape() != Shape{d.n, d.out_c, d.oh, d.ow}) {
    throw DimensionError("conv2d backward: gradient shape " + shape_string(dy.shape()));
  }
  const std::size_t k = d.k();
  const std::size_t p = d.p();
  const bool pointwise = is_pointwise(d, g);
  std::vector<T> col(pointwise ? 0 : k * p);
  std::vector<T> dcol(dx != nullptr && !pointwise ? k * p : 0);
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* xn = x.data().data() + n * d.in_c * d.h * d.w;
    const T* dyn = dy.data().data() + n * d.out_c * p;
    if (dw != nullptr) {
      const T* b = xn;
      if (!pointwise) {
        im2col(xn, d, g, col.data());
        b = col.data();
      }
      gemm_nt(dyn, b, dw->data().data(), d.out_c, k, p);
    }
    if (dx != nullptr) {
      T* dxn = dx->data().data() + n * d.in_c * d.h * d.w;
      if (pointwise) {
        gemm_tn(w.data().data(), dyn, dxn, d.out_c, k, p);
      } else {
        std::fill(dcol.begin(), dcol.end(), T{0});
        gemm_tn(w.data().data(), dyn, dcol.data(), d.out_c, k, p);
        col2im_accumulate(dcol.data(), d, g, dxn);
      }
    }
  }
}

template <typename T>
Tensor<T> avgpool2d_forward(const Tensor<T>& x, std::size_t window, ConvGeometry g) {
  require_rank(x, 4, "avgpool2d input");
  if (window == 0) throw ContractError("avgpool2d: window must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = conv_output_extent(h, window, g.stride, g.padding);
  const std::size_t ow = conv_output_extent(w, window, g.stride, g.padding);
  const T norm = T{1} / static_cast<T>(window * window);
  Tensor<T> y({n, c, oh, ow});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = x.data().data() + plane * h * w;
    T* dst = y.data().data() + plane * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc{0};
        for (std::size_t ky = 0; ky < window; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            acc += src[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)];
          }
        }
        dst[oy * ow + ox] = acc * norm;
      }
    }
  }
  return y;
}

template <typename T>
void avgpool2d_backward(const Tensor<T>& dy, std::size_t window, ConvGeometry g,
                        Tensor<T>& dx) {
  const std::size_t n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
  const std::size_t oh = dy.dim(2), ow = dy.dim(3);
  const T norm = T{1} / static_cast<T>(window * window);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = dy.data().data() + plane * oh * ow;
    T* dst = dx.data().data() + plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const T gval = src[oy * ow + ox] * norm;
        for (std::size_t ky = 0; ky < window; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            dst[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)] += gval;
          }
        }
      }
    }
  }
}

#define PUSHPULL_INSTANTIATE(T)                                                        \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, ConvGeometry); \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                ConvGeometry, Tensor<T>*, Tensor<T>*);                 \
  template Tensor<T> avgpool2d_forward(const Tensor<T>&, std::size_t, ConvGeometry);   \
  template void avgpool2d_backward(const Tensor<T>&, std::size_t, ConvGeometry,        \
                                   Tensor<T>&);

PUSHPULL_INSTANTIATE(float)
PUSHPULL_INSTANTIATE(double)

#undef PUSHPULL_INSTANTIATE

}  // namespace pushpull::kernels
