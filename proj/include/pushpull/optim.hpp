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

#include <span>

#include "pushpull/tensor.hpp"

namespace pushpull {

struct SgdOptions {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-5;
};

// Classic heavy-ball SGD with L2 decay folded into the gradient:
//   g = grad + wd * w;  buf = momentum * buf + g;  w -= lr * buf
// Throws NumericError naming the parameter if a gradient is not finite.
template <typename T>
void sgd_update(std::span<Parameter<T>* const> params, const SgdOptions& options);

// Cosine warm-up from lr_start to lr_peak over the first warm_frac of the
// steps, then cosine decay to lr_end at total_steps.
double cyclic_cosine_lr(long step, long total_steps, double lr_start, double lr_peak,
                        double lr_end, double warm_frac);

}  // namespace pushpull
