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

#ifndef SYNDISTILL_GRADCHECK_H_
#define SYNDISTILL_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>

#include "syndistill/tensor.h"

namespace syndistill {

struct GradCheckResult {
  // Worst per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||, floor).
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t scalars = 0;
  std::string worst_input;
};

// Compares backprop gradients of `loss_fn` against central finite
// differences over every entry of `inputs`. `loss_fn` must rebuild the graph
// from the current input values on each call.
template <typename Real>
GradCheckResult gradcheck(const std::function<Tensor<Real>()>& loss_fn,
                          std::span<Tensor<Real>> inputs, double step,
                          double floor = 1e-7);

}  // namespace syndistill

#endif  // SYNDISTILL_GRADCHECK_H_
