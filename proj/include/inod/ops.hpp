// Copyright 2026 The INoD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Forward and backward kernels for the small op set the pipeline needs. These
// work on plain tensors; autodiff.hpp wires them onto a tape.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "inod/errors.hpp"
#include "inod/tensor.hpp"

namespace inod {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// Output extent of a strided convolution along one axis (floor semantics).
inline std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                                      std::size_t stride, std::size_t padding,
                                      const char* axis) {
  if (stride == 0) throw ArgumentError("conv2d stride must be positive");
  if (in + 2 * padding < kernel) {
    throw DimensionError(std::string("conv2d: kernel larger than padded ") + axis +
                         " axis (" + std::to_string(in + 2 * padding) + " < " +
                         std::to_string(kernel) + ")");
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace detail {

inline void check_conv_shapes(const Shape& x, const Shape& w, const Shape& b) {
  if (x.size() != 3) {
    throw DimensionError("conv2d input must be CxHxW, got " + shape_str(x));
  }
  if (w.size() != 4 || w[2] != w[3]) {
    throw DimensionError("conv2d weights must be OutCxInCxKxK, got " + shape_str(w));
  }
  if (x[0] != w[1]) {
    throw DimensionError("conv2d channel axis mismatch: input has " +
                         std::to_string(x[0]) + " channels, weights expect " +
                         std::to_string(w[1]));
  }
  if (b.size() != 1 || b[0] != w[0]) {
    throw DimensionError("conv2d bias axis mismatch: bias " + shape_str(b) +
                         " for " + std::to_string(w[0]) + " output channels");
  }
}

// Range of output columns ox for which ox*stride - pad + k lies in [0, in).
inline void valid_range(std::size_t out, std::size_t in, std::size_t stride,
                        std::size_t pad, std::size_t k, std::size_t& lo,
                        std::size_t& hi) {
  // need ox*stride + k >= pad  and  ox*stride + k < in + pad
  lo = k >= pad ? 0 : (pad - k + stride - 1) / stride;
  const std::size_t lim = in + pad;  // exclusive bound on ox*stride + k
  hi = lim > k ? std::min(out, (lim - k - 1) / stride + 1) : 0;
  if (hi < lo) hi = lo;
}

}  // namespace detail

// Cross-correlation of a CxHxW input with OutC x InC x K x K weights.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w,
                         const Tensor<T>& b, ConvGeometry g) {
  detail::check_conv_shapes(x.shape(), w.shape(), b.shape());
  const std::size_t in_c = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
  const std::size_t out_c = w.dim(0), k = w.dim(2);
  const std::size_t out_h = conv_output_extent(in_h, k, g.stride, g.padding, "height");
  const std::size_t out_w = conv_output_extent(in_w, k, g.stride, g.padding, "width");

  Tensor<T> out({out_c, out_h, out_w});
  auto o = out.data();
  const auto xi = x.data();
  const auto wi = w.data();
  for (std::size_t oc = 0; oc < out_c; ++oc) {
    T* plane = o.data() + oc * out_h * out_w;
    std::fill(plane, plane + out_h * out_w, b[oc]);
    for (std::size_t ic = 0; ic < in_c; ++ic) {
      const T* src = xi.data() + ic * in_h * in_w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        std::size_t y_lo, y_hi;
        detail::valid_range(out_h, in_h, g.stride, g.padding, ky, y_lo, y_hi);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const T wv = wi[((oc * in_c + ic) * k + ky) * k + kx];
          if (wv == T{0}) continue;
          std::size_t x_lo, x_hi;
          detail::valid_range(out_w, in_w, g.stride, g.padding, kx, x_lo, x_hi);
          for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
            const T* row = src + (oy * g.stride + ky - g.padding) * in_w;
            T* dst = plane + oy * out_w;
            std::size_t ix = x_lo * g.stride + kx - g.padding;
            for (std::size_t ox = x_lo; ox < x_hi; ++ox, ix += g.stride) {
              dst[ox] += wv * row[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates gradients of conv2d_forward into whichever outputs are non-null.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                     ConvGeometry g, Tensor<T>* grad_x, Tensor<T>* grad_w,
                     Tensor<T>* grad_b) {
  const std::size_t in_c = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
  const std::size_t out_c = w.dim(0), k = w.dim(2);
  const std::size_t out_h = grad_out.dim(1), out_w = grad_out.dim(2);
  const auto go = grad_out.data();
  const auto xi = x.data();
  const auto wi = w.data();

  if (grad_b) {
    for (std::size_t oc = 0; oc < out_c; ++oc) {
      T acc{0};
      const T* plane = go.data() + oc * out_h * out_w;
      for (std::size_t i = 0; i < out_h * out_w; ++i) acc += plane[i];
      (*grad_b)[oc] += acc;
    }
  }
  if (!grad_x && !grad_w) return;

  for (std::size_t oc = 0; oc < out_c; ++oc) {
    const T* gplane = go.data() + oc * out_h * out_w;
    for (std::size_t ic = 0; ic < in_c; ++ic) {
      const T* src = xi.data() + ic * in_h * in_w;
      T* gsrc = grad_x ? grad_x->data().data() + ic * in_h * in_w : nullptr;
      for (std::size_t ky = 0; ky < k; ++ky) {
        std::size_t y_lo, y_hi;
        detail::valid_range(out_h, in_h, g.stride, g.padding, ky, y_lo, y_hi);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::size_t widx = ((oc * in_c + ic) * k + ky) * k + kx;
          const T wv = wi[widx];
          std::size_t x_lo, x_hi;
          detail::valid_range(out_w, in_w, g.stride, g.padding, kx, x_lo, x_hi);
          T wacc{0};
          for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.padding;
            const T* row = src + iy * in_w;
            const T* grow = gplane + oy * out_w;
            std::size_t ix = x_lo * g.stride + kx - g.padding;
            if (gsrc) {
              T* gx = gsrc + iy * in_w;
              for (std::size_t ox = x_lo; ox < x_hi; ++ox, ix += g.stride) {
                wacc += grow[ox] * row[ix];
                gx[ix] += grow[ox] * wv;
              }
            } else {
              for (std::size_t ox = x_lo; ox < x_hi; ++ox, ix += g.stride) {
                wacc += grow[ox] * row[ix];
              }
            }
          }
          if (grad_w) (*grad_w)[widx] += wacc;
        }
      }
    }
  }
}

// out[c,y,x] = a[c,y,x] where mask[y,x] is set, b[c,y,x] elsewhere. The mask
// selects whole channel columns.
template <typename T>
Tensor<T> masked_merge(const Tensor<T>& a, const Tensor<T>& b, const BinaryGrid& mask) {
  if (a.shape() != b.shape()) {
    throw DimensionError("masked_merge operands differ: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
  if (a.rank() != 3) {
    throw DimensionError("masked_merge expects CxHxW, got " + shape_str(a.shape()));
  }
  if (mask.height() != a.dim(1) || mask.width() != a.dim(2)) {
    throw DimensionError("masked_merge mask is " + std::to_string(mask.height()) + "x" +
                         std::to_string(mask.width()) + " but tensor spatial dims are " +
                         std::to_string(a.dim(1)) + "x" + std::to_string(a.dim(2)));
  }
  Tensor<T> out = b;
  const std::size_t plane = mask.size();
  const auto m = mask.data();
  for (std::size_t c = 0; c < a.dim(0); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (m[i]) out[c * plane + i] = a[c * plane + i];
    }
  }
  return out;
}

// Nearest-neighbour source index with centre sampling:
// floor((i + 0.5) * in / out), evaluated in exact integer arithmetic.
inline std::size_t nearest_source_index(std::size_t i, std::size_t in, std::size_t out) {
  return ((2 * i + 1) * in) / (2 * out);
}

template <typename V>
Grid<V> nn_resize(const Grid<V>& grid, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) {
    throw ArgumentError("nn_resize output dims must be positive, got " +
                        std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  if (grid.size() == 0) throw ArgumentError("nn_resize of an empty grid");
  Grid<V> out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const std::size_t sy = nearest_source_index(y, grid.height(), out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      out(y, x) = grid(sy, nearest_source_index(x, grid.width(), out_w));
    }
  }
  return out;
}

// Channel-wise nearest-neighbour resize of a CxHxW tensor (same convention
// as nn_resize).
template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw ArgumentError("resize_nearest to a zero dim");
  if (x.rank() != 3) {
    throw DimensionError("resize_nearest expects CxHxW, got " + shape_str(x.shape()));
  }
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h == out_h && w == out_w) return x;
  Tensor<T> out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const std::size_t sy = nearest_source_index(y, h, out_h);
      for (std::size_t xx = 0; xx < out_w; ++xx) {
        out.at(ch, y, xx) = x.at(ch, sy, nearest_source_index(xx, w, out_w));
      }
    }
  }
  return out;
}

template <typename T>
void resize_nearest_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
  const std::size_t c = grad_in.dim(0), h = grad_in.dim(1), w = grad_in.dim(2);
  const std::size_t out_h = grad_out.dim(1), out_w = grad_out.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const std::size_t sy = nearest_source_index(y, h, out_h);
      for (std::size_t xx = 0; xx < out_w; ++xx) {
        grad_in.at(ch, sy, nearest_source_index(xx, w, out_w)) += grad_out.at(ch, y, xx);
      }
    }
  }
}

template <typename T>
T sigmoid(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

// log(1 + exp(v)) without overflow.
template <typename T>
T softplus(T v) {
  return std::max(v, T{0}) + std::log1p(std::exp(-std::abs(v)));
}

}  // namespace inod
