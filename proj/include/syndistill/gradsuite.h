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

// Central finite-difference checks of every encoder and loss on small random
// instances in f64.

#ifndef SYNDISTILL_GRADSUITE_H_
#define SYNDISTILL_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace syndistill {

struct GradSuiteConfig {
  std::size_t instances = 25;
  double tolerance = 1e-5;
  double step = 1e-5;
  // Denominator floor: gradients with norm below it are judged in absolute terms.
  double floor = 1e-4;
  std::uint64_t seed = 1;
};

struct GradSuiteEntry {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst_rel_err = 0.0;
  std::string worst_input;
  bool passed() const { return instances > 0 && failures == 0; }
};

// Dimensions stay at d <= 6 and n <= 5.
std::vector<GradSuiteEntry> run_gradient_suite(const GradSuiteConfig& config);

}  // namespace syndistill

#endif  // SYNDISTILL_GRADSUITE_H_
