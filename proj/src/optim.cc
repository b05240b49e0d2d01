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

#include "syndistill/optim.h"

#include <cmath>
#include <stdexcept>

namespace syndistill {

template <typename Real>
bool adam_step(std::span<Tensor<Real>> params, AdamState<Real>& state,
               const AdamConfig& config) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), Real(0));
      state.v.emplace_back(p.size(), Real(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state holds " +
                                std::to_string(state.m.size()) +
                                " moments for " + std::to_string(params.size()) +
                                " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].size()) {
      throw ShapeError("adam_step: moment size " + std::to_string(state.m[k].size()) +
                       " vs parameter shape " + shape_str(params[k].shape()));
    }
    for (Real g : params[k].grad_span()) {
      if (!std::isfinite(g)) {
        ++state.skipped;
        return false;
      }
    }
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto g = params[k].grad_span();
    if (g.empty()) continue;
    auto w = params[k].mutable_data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<Real>(b1 * m[i] + (1.0 - b1) * g[i]);
      v[i] = static_cast<Real>(b2 * v[i] + (1.0 - b2) * g[i] * g[i]);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = static_cast<Real>(w[i] - config.lr * mhat / (std::sqrt(vhat) + config.eps));
    }
  }
  return true;
}

template bool adam_step(std::span<Tensor<float>>, AdamState<float>&, const AdamConfig&);
template bool adam_step(std::span<Tensor<double>>, AdamState<double>&, const AdamConfig&);

}  // namespace syndistill
