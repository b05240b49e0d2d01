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

// "SYD1" named-tensor checkpoints.
//
// Layout (all integers little-endian uint32):
//   "SYD1" | version (1 byte) | record*
//   record := name_len | name (UTF-8) | rank | dim[rank] | f32 payload
// Records run to end of file.

#ifndef SYNDISTILL_CHECKPOINT_H_
#define SYNDISTILL_CHECKPOINT_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "syndistill/params.h"
#include "syndistill/tensor.h"

namespace syndistill {

inline constexpr char kCheckpointMagic[4] = {'S', 'Y', 'D', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

class Checkpoint {
 public:
  template <typename Real>
  static Checkpoint from_params(const ParamStore<Real>& store,
                                const std::string& prefix = "");

  void add(std::string name, Shape shape, std::vector<float> values);
  // Appends all records of `other`.
  void merge(const Checkpoint& other);

  // Copies values into every parameter of `store` (names must all be
  // present with matching shapes; extra records are ignored).
  template <typename Real>
  void apply_to(ParamStore<Real>& store, const std::string& prefix = "") const;

  const CheckpointRecord* find(const std::string& name) const;
  const std::vector<CheckpointRecord>& records() const { return records_; }

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void write(const std::string& path) const;
  static Checkpoint read(const std::string& path);

 private:
  std::vector<CheckpointRecord> records_;
};

}  // namespace syndistill

#endif  // SYNDISTILL_CHECKPOINT_H_
