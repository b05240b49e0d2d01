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

#ifndef SYNDISTILL_OPTIM_H_
#define SYNDISTILL_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "syndistill/params.h"
#include "syndistill/tensor.h"

namespace syndistill {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments per parameter plus the bias-correction step count.
template <typename Real>
struct AdamState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::int64_t step = 0;
  std::int64_t skipped = 0;  // steps dropped because of a non-finite gradient
};

// One Adam update in place, using the gradients accumulated on `params`.
// Returns false (and counts a skip) when any gradient is non-finite; the
// parameters and moments are then left untouched.
template <typename Real>
bool adam_step(std::span<Tensor<Real>> params, AdamState<Real>& state,
               const AdamConfig& config);

template <typename Real>
class Adam {
 public:
  Adam(const ParamStore<Real>& store, AdamConfig config)
      : params_(store.tensors()), config_(config) {}
  Adam(std::vector<Tensor<Real>> params, AdamConfig config)
      : params_(std::move(params)), config_(config) {}

  bool step() { return adam_step<Real>(params_, state_, config_); }
  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  AdamState<Real>& state() { return state_; }
  const AdamState<Real>& state() const { return state_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor<Real>>& params() const { return params_; }

 private:
  std::vector<Tensor<Real>> params_;
  AdamConfig config_;
  AdamState<Real> state_;
};

}  // namespace syndistill

#endif  // SYNDISTILL_OPTIM_H_
