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

#pragma once

#include <cstddef>

#include "pushpull/tensor.hpp"

// Tape-free numeric kernels shared by the autodiff primitives and the fused
// PushPull unit. Backward kernels accumulate into caller-allocated buffers.
namespace pushpull::kernels {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// floor((extent + 2*padding - kernel) / stride) + 1, validated.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel,
                               std::size_t stride, std::size_t padding);

// Cross-correlation of x (N x I x H x W) with w (O x I x kh x kw), no bias.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, ConvGeometry g);

// dx and dw may be null when that gradient is not needed.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                     ConvGeometry g, Tensor<T>* dx, Tensor<T>* dw);

// Average pooling with zero padding; every window is normalized by window^2,
// including windows that overlap the padding.
template <typename T>
Tensor<T> avgpool2d_forward(const Tensor<T>& x, std::size_t window, ConvGeometry g);

template <typename T>
void avgpool2d_backward(const Tensor<T>& dy, std::size_t window, ConvGeometry g,
                        Tensor<T>& dx);

}  // namespace pushpull::kernels
