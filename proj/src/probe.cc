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

#include "syndistill/probe.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "syndistill/distill.h"

namespace syndistill {
namespace {

void append_row(std::vector<float>& out, const T32& reps, std::size_t row) {
  const std::size_t d = reps.cols();
  for (std::size_t c = 0; c < d; ++c) out.push_back(reps.at(row, c));
}

}  // namespace

std::string_view probe_name(ProbeKind kind) {
  return kind == ProbeKind::kConstituent ? "constituent" : "dependency";
}

ProbeKind parse_probe(std::string_view name) {
  if (name == "constituent" || name == "constituent-labeling") return ProbeKind::kConstituent;
  if (name == "dependency" || name == "dependency-labeling") return ProbeKind::kDependency;
  throw std::invalid_argument("unknown probe '" + std::string(name) + "'");
}

void ProbeConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("probe epochs must be positive");
  if (batch == 0) throw std::invalid_argument("probe batch must be positive");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("probe lr must be positive");
}

std::vector<T32> frozen_reps(const Student& student, const std::vector<EncodedExample>& data,
                             std::size_t batch) {
  std::vector<T32> out;
  std::mt19937_64 rng(0);
  for (std::size_t start = 0; start < data.size(); start += batch) {
    std::vector<const std::vector<int>*> ids;
    for (std::size_t i = start; i < std::min(data.size(), start + batch); ++i)
      ids.push_back(&data[i].sentence.ids);
    const auto reps = student.encode(ids, false, rng);
    for (std::size_t b = 0; b < ids.size(); ++b)
      out.push_back(Student::sentence_reps(reps, b).detach());
  }
  return out;
}

ProbeItems probe_items(ProbeKind kind, const std::vector<T32>& reps,
                       const std::vector<EncodedExample>& data) {
  if (reps.size() != data.size()) throw std::invalid_argument("probe: representation count mismatch");
  ProbeItems items;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const EncodedSentence& s = data[k].sentence;
    const T32& r = reps[k];
    if (r.rows() != s.size()) throw std::invalid_argument("probe: representation length mismatch");
    const std::size_t d = r.cols();
    if (kind == ProbeKind::kConstituent) {
      if (s.bin.n != static_cast<int>(s.size()))
        throw std::invalid_argument("constituent probe needs constituency trees");
      items.dim = 3 * d;
      for (const Span& sp : s.bin.spans) {
        if (sp.end - sp.begin < 2 || sp.label == kNullLabelId) continue;
        const auto first = static_cast<std::size_t>(sp.begin);
        const auto last = static_cast<std::size_t>(sp.end - 1);
        for (std::size_t c = 0; c < d; ++c) items.features.push_back(r.at(last, c) - r.at(first, c));
        append_row(items.features, r, first);
        append_row(items.features, r, last);
        items.labels.push_back(sp.label);
      }
    } else {
      if (s.dep.size() != s.size() || s.dep_label_ids.size() != s.size())
        throw std::invalid_argument("dependency probe needs dependency trees");
      items.dim = 2 * d;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const int h = s.dep.heads[i];
        if (h == 0) continue;
        append_row(items.features, r, static_cast<std::size_t>(h - 1));
        append_row(items.features, r, i);
        items.labels.push_back(s.dep_label_ids[i]);
      }
    }
  }
  if (items.labels.empty())
    throw std::invalid_argument(std::string("no ") + std::string(probe_name(kind)) +
                                " probe items in the data");
  return items;
}

std::string ProbeResult::to_json() const {
  return nlohmann::json{{"probe", std::string(probe_name(kind))},
                        {"accuracy", accuracy},
                        {"majority", majority},
                        {"train_items", train_items},
                        {"test_items", test_items}}
      .dump();
}

ProbeResult train_probe(ProbeKind kind, const ProbeItems& train, const ProbeItems& test,
                        std::size_t classes, const ProbeConfig& config) {
  config.validate();
  if (train.size() == 0 || test.size() == 0) throw std::invalid_argument("probe: no items");
  if (train.dim != test.dim) throw std::invalid_argument("probe: feature dimension mismatch");
  for (int l : train.labels)
    if (l < 0 || static_cast<std::size_t>(l) >= classes) throw std::invalid_argument("probe: label out of range");
  ParamStore<float> store;
  std::mt19937_64 rng(config.seed);
  const T32 W = store.create("probe.W", {train.dim, classes}, ParamStore<float>::glorot(train.dim, classes), rng);
  const T32 b = store.create("probe.b", {classes}, 0.0, rng);
  Adam<float> adam(store, config.adam);
  const std::size_t D = train.dim;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::vector<float> x;
      std::vector<double> targets((end - start) * classes, 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t item = order[k];
        x.insert(x.end(), train.features.begin() + item * D, train.features.begin() + (item + 1) * D);
        targets[(k - start) * classes + train.labels[item]] = 1.0;
      }
      const T32 logits = add(matmul(T32::from({end - start, D}, std::move(x)), W), b);
      const T32 loss = soft_cross_entropy(logits, targets);
      adam.zero_grad();
      loss.backward();
      adam.step();
    }
  }
  const T32 logits = add(matmul(T32::from({test.size(), D}, test.features), W), b);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    correct += static_cast<int>(best) == test.labels[r];
  }
  std::map<int, std::size_t> counts;
  for (int l : train.labels) ++counts[l];
  const int top = std::max_element(counts.begin(), counts.end(), [](auto& a, auto& c) {
                    return a.second < c.second;
                  })->first;
  ProbeResult result;
  result.kind = kind;
  result.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
  result.majority = 100.0 * static_cast<double>(std::count(test.labels.begin(), test.labels.end(), top)) /
                    static_cast<double>(test.size());
  result.train_items = train.size();
  result.test_items = test.size();
  return result;
}

ProbeResult probe_student(const Student& student, ProbeKind kind,
                          const std::vector<EncodedExample>& train,
                          const std::vector<EncodedExample>& test, const Vocabularies& vocab,
                          const ProbeConfig& config) {
  const std::uint64_t before = student.params().fingerprint();
  const ProbeItems tr = probe_items(kind, frozen_reps(student, train), train);
  const ProbeItems te = probe_items(kind, frozen_reps(student, test), test);
  const std::size_t classes =
      kind == ProbeKind::kConstituent ? vocab.span_labels.size() : vocab.dep_labels.size();
  ProbeResult r = train_probe(kind, tr, te, classes, config);
  if (student.params().fingerprint() != before)
    throw std::logic_error("probing modified the backbone parameters");
  return r;
}

std::vector<double> dominance_scores(const std::vector<double>& full,
                                     const std::vector<double>& no_dep,
                                     const std::vector<double>& no_con) {
  if (full.size() != no_dep.size() || full.size() != no_con.size())
    throw std::invalid_argument("dominance: score vectors differ in length");
  std::vector<double> out;
  out.reserve(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double d_dep = std::max(0.0, full[i] - no_dep[i]);
    const double d_con = std::max(0.0, full[i] - no_con[i]);
    out.push_back(d_dep + d_con == 0.0 ? 0.5 : d_dep / (d_dep + d_con));
  }
  return out;
}

DominanceSummary DominanceSummary::of(std::vector<double> scores, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  DominanceSummary s;
  s.histogram.assign(bins, 0);
  double total = 0.0;
  for (double v : scores) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("dominance score outside [0, 1]");
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    ++s.histogram[bin];
    total += v;
    if (v > 0.5) {
      ++s.dependency_leaning;
    } else if (v < 0.5) {
      ++s.constituency_leaning;
    } else {
      ++s.balanced;
    }
  }
  s.mean = scores.empty() ? 0.5 : total / static_cast<double>(scores.size());
  s.scores = std::move(scores);
  return s;
}

std::string DominanceSummary::histogram_csv() const {
  std::ostringstream out;
  out << "bin_low,bin_high,count\n";
  const double w = 1.0 / static_cast<double>(histogram.size());
  for (std::size_t k = 0; k < histogram.size(); ++k)
    out << k * w << ',' << (k + 1) * w << ',' << histogram[k] << '\n';
  return out.str();
}

std::string DominanceSummary::to_json() const {
  return nlohmann::json{{"examples", scores.size()},
                        {"mean", mean},
                        {"dependency_leaning", dependency_leaning},
                        {"constituency_leaning", constituency_leaning},
                        {"balanced", balanced},
                        {"histogram", histogram}}
      .dump();
}

}  // namespace syndistill
