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

// Distillation and auxiliary losses, teacher ensembling, and the annealing
// schedule. Losses are scalar tensors wired into the student's graph;
// teacher-side inputs are plain constants.

#ifndef SYNDISTILL_DISTILL_H_
#define SYNDISTILL_DISTILL_H_

#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "syndistill/encoders.h"
#include "syndistill/structures.h"
#include "syndistill/tensor.h"

namespace syndistill {

enum class InjectionMode { kFeature, kStructure };  // A, B
enum class TeacherDist { kSoft, kHard };

struct DistillConfig {
  double eta = 0.5;
  double lambda1 = 0.6;
  double lambda2 = 0.2;
  double zeta = 0.2;
  InjectionMode mode = InjectionMode::kStructure;
  TeacherDist teacher_dist = TeacherDist::kSoft;
  double mask_ratio = 0.15;
  double temperature = 1.0;

  // Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// alpha = t / T.
double anneal_alpha(std::size_t t, std::size_t total);

// Arithmetic mean of class distributions.
std::vector<double> mean_distribution(const std::vector<std::vector<double>>& dists);

// alpha * onehot(label) + (1 - alpha) * mean(teachers). Each teacher must sum
// to one within 1e-4.
std::vector<double> mixed_target(int label, std::size_t classes,
                                 const std::vector<std::vector<double>>& teachers, double alpha);

// Mean over rows of H(target_r, softmax(logits_r / temperature)); targets is
// row-major [rows, classes].
template <typename Real>
Tensor<Real> soft_cross_entropy(const Tensor<Real>& logits, std::span<const double> targets,
                                double temperature = 1.0);

// Cross-entropy against the annealed mixture for a single example.
template <typename Real>
Tensor<Real> output_distill_loss(int label, const std::vector<std::vector<double>>& teachers,
                                 const Tensor<Real>& student_logits, double alpha,
                                 double temperature = 1.0);

// 1/2 sum_j ||t_j - s_j||^2 over rows; `teacher` is a constant.
template <typename Real>
Tensor<Real> feat_distill(const Tensor<Real>& teacher, const Tensor<Real>& student);

// eta * dep + (1 - eta) * con.
template <typename Real>
Tensor<Real> combine_syn(const Tensor<Real>& dep, const Tensor<Real>& con, double eta);
double combine_syn(double dep, double con, double eta);

// Positions to mask: each with probability `ratio`, at least one.
std::vector<int> sample_mask(std::size_t n, double ratio, std::mt19937_64& rng);

// sum_j H(onehot(target_j), softmax(logits_j)); zero for no rows.
template <typename Real>
Tensor<Real> semantic_lm_loss(const Tensor<Real>& logits, std::span<const int> targets);

// Teacher-side arc and label distributions of one sentence.
struct DepTarget {
  std::size_t n = 0;
  std::size_t labels = 0;
  std::vector<double> arcs;        // [n, n + 1]
  std::vector<int> heads;          // teacher's best head per dependent
  std::vector<double> label_dist;  // [n, labels] at that head

  // One-hot at the given heads and label ids.
  static DepTarget hard(std::span<const int> heads, std::span<const int> label_ids,
                        std::size_t labels);
};

// sum_i H(P_t(arc_i), P_s(arc_i)) + sum_i H(P_t(label_i), P_s(label_i | teacher head)).
template <typename Real>
Tensor<Real> dep_inject_loss(const DepTarget& teacher, const ArcScores<Real>& student);

// max(0, max_t [Scr(t) + hamming(t, T*)] - Scr(T*)) over the student's
// [span_count(n), labels] score table.
template <typename Real>
Tensor<Real> con_inject_loss(const Tensor<Real>& table, const BinTree& reference);

// zeta / 2 * sum ||theta||^2.
template <typename Real>
Tensor<Real> reg_loss(std::span<const Tensor<Real>> params, double zeta);

template <typename Real>
struct LossComponents {
  Tensor<Real> output;
  Tensor<Real> syn;  // undefined when absent
  Tensor<Real> sem;
  Tensor<Real> reg;
};

// output + lambda1 * syn + lambda2 * sem + reg, skipping absent terms.
// Throws NonFiniteLoss naming the first non-finite component.
template <typename Real>
Tensor<Real> total_loss(const LossComponents<Real>& parts, double lambda1, double lambda2);

}  // namespace syndistill

#endif  // SYNDISTILL_DISTILL_H_
