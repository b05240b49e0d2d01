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

#include "syndistill/params.h"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace syndistill {

template <typename Real>
Tensor<Real> ParamStore<Real>::create(const std::string& name, Shape shape,
                                      double bound, std::mt19937_64& rng) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("parameter registered twice: " + name);
  }
  std::vector<Real> values(numel(shape));
  if (bound > 0) {
    for (Real& v : values) v = static_cast<Real>((2.0 * uniform01(rng) - 1.0) * bound);
  }
  Tensor<Real> t = Tensor<Real>::from(std::move(shape), std::move(values), true);
  entries_.emplace_back(name, t);
  return t;
}

template <typename Real>
double ParamStore<Real>::glorot(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename Real>
std::vector<Tensor<Real>> ParamStore<Real>::tensors() const {
  std::vector<Tensor<Real>> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t);
  return out;
}

template <typename Real>
const Tensor<Real>* ParamStore<Real>::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return &e.second;
  }
  return nullptr;
}

template <typename Real>
const Tensor<Real>& ParamStore<Real>::at(const std::string& name) const {
  const Tensor<Real>* t = find(name);
  if (t == nullptr) throw std::out_of_range("no parameter named " + name);
  return *t;
}

template <typename Real>
std::size_t ParamStore<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

template <typename Real>
void ParamStore<Real>::set_trainable(bool on) {
  for (auto& [_, t] : entries_) {
    Tensor<Real> handle = t;
    handle.set_requires_grad(on);
  }
}

template <typename Real>
void ParamStore<Real>::zero_grad() {
  for (auto& [_, t] : entries_) {
    Tensor<Real> handle = t;
    handle.zero_grad();
  }
}

template <typename Real>
std::uint64_t ParamStore<Real>::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [name, t] : entries_) {
    mix(name.data(), name.size());
    mix(t.data().data(), t.size() * sizeof(Real));
  }
  return h;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace syndistill
