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

#ifndef SYNDISTILL_PARAMS_H_
#define SYNDISTILL_PARAMS_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "syndistill/tensor.h"

namespace syndistill {

// Ordered registry of named trainable tensors. Registration order is the
// enumeration order of the parameter vector (used by the optimizer, the
// regularizer, and checkpoints).
template <typename Real>
class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor<Real>>;

  // Uniform(-bound, bound) initialization; bound == 0 gives zeros.
  Tensor<Real> create(const std::string& name, Shape shape, double bound,
                      std::mt19937_64& rng);
  // Glorot-uniform bound for a [fan_in, fan_out] matrix.
  static double glorot(std::size_t fan_in, std::size_t fan_out);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor<Real>> tensors() const;
  const Tensor<Real>* find(const std::string& name) const;
  const Tensor<Real>& at(const std::string& name) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void set_trainable(bool on);
  void zero_grad();
  // Order-sensitive FNV-1a over names and raw value bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace syndistill

#endif  // SYNDISTILL_PARAMS_H_
