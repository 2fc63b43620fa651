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

#include "pushpull/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pushpull {

template <typename T>
void sgd_update(std::span<Parameter<T>* const> params, const SgdOptions& options) {
  for (const Parameter<T>* p : params) {
    if (!p->grad.all_finite()) {
      throw NumericError("sgd_update: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  const T lr = static_cast<T>(options.lr);
  const T mu = static_cast<T>(options.momentum);
  const T wd = static_cast<T>(options.weight_decay);
  for (Parameter<T>* p : params) {
    auto w = p->value.data();
    auto g = p->grad.data();
    auto buf = p->momentum.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const T step = g[i] + wd * w[i];
      buf[i] = mu * buf[i] + step;
      w[i] -= lr * buf[i];
    }
  }
}

double cyclic_cosine_lr(long step, long total_steps, double lr_start, double lr_peak,
                        double lr_end, double warm_frac) {
  if (total_steps <= 0) throw ContractError("cyclic_cosine_lr: total_steps must be positive");
  if (step < 0 || step > total_steps) {
    throw RangeError("cyclic_cosine_lr: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total_steps) + "]");
  }
  if (!(warm_frac > 0.0 && warm_frac < 1.0)) {
    throw ContractError("cyclic_cosine_lr: warm_frac must lie in (0, 1)");
  }
  const double warm = warm_frac * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s <= warm) {
    const double t = s / warm;
    return lr_start + (lr_peak - lr_start) * (1.0 - std::cos(std::numbers::pi * t)) / 2.0;
  }
  const double u = (s - warm) / (static_cast<double>(total_steps) - warm);
  return lr_end + (lr_peak - lr_end) * (1.0 + std::cos(std::numbers::pi * u)) / 2.0;
}

template void sgd_update(std::span<Parameter<float>* const>, const SgdOptions&);
template void sgd_update(std::span<Parameter<double>* const>, const SgdOptions&);

}  // namespace pushpull
