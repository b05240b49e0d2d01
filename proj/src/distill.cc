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

#include "syndistill/distill.h"

#include <cmath>
#include <numeric>

namespace syndistill {

void DistillConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  check(eta >= 0.0 && eta <= 1.0, "eta must lie in [0, 1]");
  check(lambda1 >= 0.0 && std::isfinite(lambda1), "lambda1 must be >= 0");
  check(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 must be >= 0");
  check(zeta >= 0.0 && std::isfinite(zeta), "zeta must be >= 0");
  check(mask_ratio > 0.0 && mask_ratio < 1.0, "mask_ratio must lie in (0, 1)");
  check(temperature > 0.0 && std::isfinite(temperature), "temperature must be > 0");
}

double anneal_alpha(std::size_t t, std::size_t total) {
  if (total == 0) throw std::invalid_argument("anneal_alpha: T must be positive");
  if (t > total) throw std::invalid_argument("anneal_alpha: t exceeds T");
  return static_cast<double>(t) / static_cast<double>(total);
}

std::vector<double> mean_distribution(const std::vector<std::vector<double>>& dists) {
  if (dists.empty()) throw std::invalid_argument("mean_distribution: no distributions");
  std::vector<double> out(dists[0].size(), 0.0);
  for (const auto& d : dists) {
    if (d.size() != out.size()) throw std::invalid_argument("mean_distribution: size mismatch");
    for (std::size_t k = 0; k < d.size(); ++k) out[k] += d[k];
  }
  for (double& v : out) v /= static_cast<double>(dists.size());
  return out;
}

namespace {

void check_distribution(const std::vector<double>& d, std::size_t classes, const char* what) {
  if (d.size() != classes) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(d.size()) +
                                " entries for " + std::to_string(classes) + " classes");
  }
  const double s = std::accumulate(d.begin(), d.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-4) {
    throw std::invalid_argument(std::string(what) + ": distribution sums to " + std::to_string(s));
  }
}

}  // namespace

std::vector<double> mixed_target(int label, std::size_t classes,
                                 const std::vector<std::vector<double>>& teachers, double alpha) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw std::invalid_argument("mixed_target: label out of range");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mixed_target: alpha");
  std::vector<double> target(classes, 0.0);
  target[label] = alpha;
  if (alpha < 1.0) {
    if (teachers.empty()) throw std::invalid_argument("mixed_target: no teachers for alpha < 1");
    for (const auto& t : teachers) check_distribution(t, classes, "teacher");
    const auto mean = mean_distribution(teachers);
    for (std::size_t k = 0; k < classes; ++k) target[k] += (1.0 - alpha) * mean[k];
  }
  return target;
}

template <typename Real>
Tensor<Real> soft_cross_entropy(const Tensor<Real>& logits, std::span<const double> targets,
                                double temperature) {
  if (targets.size() != logits.size()) {
    throw ShapeError("soft_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_str(logits.shape()));
  }
  std::vector<Real> t(targets.begin(), targets.end());
  const Tensor<Real> scaled =
      temperature == 1.0 ? logits : scale(logits, static_cast<Real>(1.0 / temperature));
  const Tensor<Real> lp = log_softmax(scaled);
  return scale(sum(mul(lp, Tensor<Real>::from(logits.shape(), std::move(t)))),
               static_cast<Real>(-1.0 / static_cast<double>(logits.rows())));
}

template <typename Real>
Tensor<Real> output_distill_loss(int label, const std::vector<std::vector<double>>& teachers,
                                 const Tensor<Real>& student_logits, double alpha,
                                 double temperature) {
  const auto target = mixed_target(label, student_logits.cols(), teachers, alpha);
  return soft_cross_entropy(student_logits, target, temperature);
}

template <typename Real>
Tensor<Real> feat_distill(const Tensor<Real>& teacher, const Tensor<Real>& student) {
  if (teacher.rows() != student.rows()) {
    throw ShapeError("feat_distill: " + std::to_string(teacher.rows()) + " teacher rows vs " +
                     std::to_string(student.rows()) + " student rows");
  }
  const Tensor<Real> d = sub(student, teacher.detach());
  return scale(sum(mul(d, d)), Real(0.5));
}

template <typename Real>
Tensor<Real> combine_syn(const Tensor<Real>& dep, const Tensor<Real>& con, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("combine_syn: eta");
  if (eta == 1.0) return dep;
  if (eta == 0.0) return con;
  return add(scale(dep, static_cast<Real>(eta)), scale(con, static_cast<Real>(1.0 - eta)));
}

double combine_syn(double dep, double con, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("combine_syn: eta");
  if (eta == 1.0) return dep;
  if (eta == 0.0) return con;
  return eta * dep + (1.0 - eta) * con;
}

std::vector<int> sample_mask(std::size_t n, double ratio, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("sample_mask: empty sentence");
  std::vector<int> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (uniform01(rng) < ratio) out.push_back(static_cast<int>(j));
  }
  if (out.empty()) out.push_back(static_cast<int>(rng() % n));
  return out;
}

template <typename Real>
Tensor<Real> semantic_lm_loss(const Tensor<Real>& logits, std::span<const int> targets) {
  if (targets.empty()) return Tensor<Real>::scalar(Real(0));
  if (logits.rows() != targets.size()) {
    throw ShapeError("semantic_lm_loss: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_str(logits.shape()));
  }
  const std::size_t V = logits.cols();
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= V)
      throw std::invalid_argument("semantic_lm_loss: target id out of range");
    idx.push_back(r * V + targets[r]);
  }
  return scale(pick_sum(log_softmax(logits), idx), Real(-1));
}

DepTarget DepTarget::hard(std::span<const int> heads, std::span<const int> label_ids,
                          std::size_t labels) {
  const std::size_t n = heads.size();
  if (label_ids.size() != n) throw std::invalid_argument("DepTarget: label count mismatch");
  DepTarget t;
  t.n = n;
  t.labels = labels;
  t.arcs.assign(n * (n + 1), 0.0);
  t.label_dist.assign(n * labels, 0.0);
  t.heads.assign(heads.begin(), heads.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (heads[i] < 0 || static_cast<std::size_t>(heads[i]) > n)
      throw std::invalid_argument("DepTarget: head out of range");
    if (label_ids[i] < 0 || static_cast<std::size_t>(label_ids[i]) >= labels)
      throw std::invalid_argument("DepTarget: label out of range");
    t.arcs[i * (n + 1) + heads[i]] = 1.0;
    t.label_dist[i * labels + label_ids[i]] = 1.0;
  }
  return t;
}

template <typename Real>
Tensor<Real> dep_inject_loss(const DepTarget& teacher, const ArcScores<Real>& student) {
  const std::size_t n = teacher.n;
  if (student.arcs.shape() != Shape{n, n + 1} || teacher.arcs.size() != n * (n + 1) ||
      teacher.heads.size() != n || student.label_bias.size() != teacher.labels ||
      teacher.label_dist.size() != n * teacher.labels) {
    throw ShapeError("dep_inject_loss: teacher over " + std::to_string(n) + " tokens x " +
                     std::to_string(teacher.labels) + " labels, student arcs " +
                     shape_str(student.arcs.shape()));
  }
  const Real rows = static_cast<Real>(n);
  const Tensor<Real> arc = scale(soft_cross_entropy(student.arcs, teacher.arcs), rows);
  const Tensor<Real> lab =
      scale(soft_cross_entropy(label_logits(student, teacher.heads), teacher.label_dist), rows);
  return add(arc, lab);
}

template <typename Real>
Tensor<Real> con_inject_loss(const Tensor<Real>& table, const BinTree& reference) {
  const int n = reference.n;
  if (n <= 0 || table.rows() != span_count(n)) {
    throw ShapeError("con_inject_loss: table " + shape_str(table.shape()) + " for a tree over " +
                     std::to_string(n) + " tokens");
  }
  const SpanScores scores = to_span_scores(table, n);
  const ChartResult best = cyk_augmented(scores, reference);
  const auto best_idx = score_indices(scores, best.tree);
  const auto ref_idx = score_indices(scores, reference);
  const Tensor<Real> margin = add_scalar(sub(pick_sum(table, best_idx), pick_sum(table, ref_idx)),
                                         static_cast<Real>(hamming(best.tree, reference)));
  if (margin.item() <= Real(0)) return scale(margin, Real(0));
  return margin;
}

template <typename Real>
Tensor<Real> reg_loss(std::span<const Tensor<Real>> params, double zeta) {
  if (!(zeta >= 0.0)) throw std::invalid_argument("reg_loss: zeta must be >= 0");
  Tensor<Real> total;
  for (const auto& p : params) {
    const Tensor<Real> sq = sum(mul(p, p));
    total = total.defined() ? add(total, sq) : sq;
  }
  if (!total.defined()) return Tensor<Real>::scalar(Real(0));
  return scale(total, static_cast<Real>(zeta / 2.0));
}

template <typename Real>
Tensor<Real> total_loss(const LossComponents<Real>& parts, double lambda1, double lambda2) {
  auto finite = [](const Tensor<Real>& t, const char* name) {
    if (t.defined() && !std::isfinite(static_cast<double>(t.item())))
      throw NonFiniteLoss(std::string("non-finite ") + name + " loss");
  };
  finite(parts.output, "output");
  finite(parts.syn, "syntax");
  finite(parts.sem, "semantic");
  finite(parts.reg, "regularization");
  Tensor<Real> total = parts.output;
  auto accumulate = [&total](const Tensor<Real>& t, double w) {
    if (!t.defined() || w == 0.0) return;
    const Tensor<Real> term = w == 1.0 ? t : scale(t, static_cast<Real>(w));
    total = total.defined() ? add(total, term) : term;
  };
  accumulate(parts.syn, lambda1);
  accumulate(parts.sem, lambda2);
  accumulate(parts.reg, 1.0);
  if (!total.defined()) throw std::invalid_argument("total_loss: no components");
  return total;
}

#define SYNDISTILL_INSTANTIATE(Real)                                                          \
  template Tensor<Real> soft_cross_entropy(const Tensor<Real>&, std::span<const double>,      \
                                           double);                                           \
  template Tensor<Real> output_distill_loss(int, const std::vector<std::vector<double>>&,     \
                                            const Tensor<Real>&, double, double);             \
  template Tensor<Real> feat_distill(const Tensor<Real>&, const Tensor<Real>&);               \
  template Tensor<Real> combine_syn(const Tensor<Real>&, const Tensor<Real>&, double);        \
  template Tensor<Real> semantic_lm_loss(const Tensor<Real>&, std::span<const int>);          \
  template Tensor<Real> dep_inject_loss(const DepTarget&, const ArcScores<Real>&);            \
  template Tensor<Real> con_inject_loss(const Tensor<Real>&, const BinTree&);                 \
  template Tensor<Real> reg_loss(std::span<const Tensor<Real>>, double);                      \
  template Tensor<Real> total_loss(const LossComponents<Real>&, double, double);

SYNDISTILL_INSTANTIATE(float)
SYNDISTILL_INSTANTIATE(double)

}  // namespace syndistill
