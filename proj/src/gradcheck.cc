// Copyright 2026 The syndistill Authors.
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

#include "syndistill/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace syndistill {

template <typename Real>
GradCheckResult gradcheck(const std::function<Tensor<Real>()>& loss_fn,
                          std::span<Tensor<Real>> inputs, double step,
                          double floor) {
  for (auto& t : inputs) t.zero_grad();
  loss_fn().backward();
  std::vector<std::vector<Real>> analytic;
  for (auto& t : inputs) analytic.push_back(t.grad());

  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = static_cast<Real>(saved + step);
      const double up = loss_fn().item();
      values[i] = static_cast<Real>(saved - step);
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      result.max_abs_err = std::max(result.max_abs_err, std::abs(a - numeric));
      ++result.scalars;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), floor});
    const double rel = std::sqrt(diff2) / denom;
    if (rel >= result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_input = "input " + std::to_string(k) + " " +
                           shape_str(inputs[k].shape());
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return result;
}

template GradCheckResult gradcheck(const std::function<Tensor<float>()>&,
                                   std::span<Tensor<float>>, double, double);
template GradCheckResult gradcheck(const std::function<Tensor<double>()>&,
                                   std::span<Tensor<double>>, double, double);

}  // namespace syndistill
