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

#include "syndistill/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace syndistill {

namespace {

static_assert(sizeof(float) == 4);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename Real>
Checkpoint Checkpoint::from_params(const ParamStore<Real>& store,
                                   const std::string& prefix) {
  Checkpoint ckpt;
  for (const auto& [name, t] : store.entries()) {
    std::vector<float> values(t.data().begin(), t.data().end());
    ckpt.add(prefix + name, t.shape(), std::move(values));
  }
  return ckpt;
}

void Checkpoint::add(std::string name, Shape shape, std::vector<float> values) {
  if (numel(shape) != values.size()) {
    throw CheckpointError("record " + name + ": shape " + shape_str(shape) +
                          " does not match " + std::to_string(values.size()) +
                          " values");
  }
  records_.push_back({std::move(name), std::move(shape), std::move(values)});
}

void Checkpoint::merge(const Checkpoint& other) {
  for (const auto& r : other.records_) records_.push_back(r);
}

template <typename Real>
void Checkpoint::apply_to(ParamStore<Real>& store, const std::string& prefix) const {
  for (const auto& [name, t] : store.entries()) {
    const CheckpointRecord* r = find(prefix + name);
    if (r == nullptr) throw CheckpointError("checkpoint lacks parameter " + prefix + name);
    if (r->shape != t.shape()) {
      throw CheckpointError("parameter " + prefix + name + ": checkpoint shape " +
                            shape_str(r->shape) + " vs model shape " +
                            shape_str(t.shape()));
    }
    Tensor<Real> handle = t;
    auto dst = handle.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(r->values[i]);
  }
}

const CheckpointRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string Checkpoint::serialize() const {
  std::string out(kCheckpointMagic, 4);
  out.push_back(static_cast<char>(kCheckpointVersion));
  for (const auto& r : records_) {
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    put_u32(out, static_cast<std::uint32_t>(r.shape.size()));
    for (std::size_t d : r.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : r.values) put_f32(out, f);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a SYD1 checkpoint (bad magic)");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(static_cast<int>(static_cast<std::uint8_t>(bytes[4]))));
  }
  Checkpoint ckpt;
  Reader in(bytes);
  in.str(5);
  while (!in.done()) {
    const std::uint32_t name_len = in.u32();
    std::string name = in.str(name_len);
    const std::uint32_t rank = in.u32();
    Shape shape(rank);
    for (auto& d : shape) d = in.u32();
    std::vector<float> values(numel(shape));
    for (float& f : values) f = in.f32();
    ckpt.add(std::move(name), std::move(shape), std::move(values));
  }
  return ckpt;
}

void Checkpoint::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint Checkpoint::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

template Checkpoint Checkpoint::from_params(const ParamStore<float>&, const std::string&);
template Checkpoint Checkpoint::from_params(const ParamStore<double>&, const std::string&);
template void Checkpoint::apply_to(ParamStore<float>&, const std::string&) const;
template void Checkpoint::apply_to(ParamStore<double>&, const std::string&) const;

}  // namespace syndistill
