// Copyright 2026 The crossprune Authors
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

#include "crossprune/safetensors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "crossprune/error.hpp"

namespace crossprune {

namespace {

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1Fu;
  std::uint32_t mant = h & 0x3FFu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {  // subnormal
      exp = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3FFu;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 0x1F) {
    bits = sign | 0x7F800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

std::int64_t TensorInfo::element_count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

SafetensorsFile SafetensorsFile::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open weights file '" + path.string() + "'");
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) throw ArtifactError("weights file '" + path.string() + "' is truncated");
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | len_bytes[i];
  const auto file_size = std::filesystem::file_size(path);
  if (header_len > file_size - 8) throw ArtifactError("weights file '" + path.string() + "' has a corrupt header length");

  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  SafetensorsFile file;
  file.path_ = path.string();
  file.data_.resize(file_size - 8 - header_len);
  in.read(reinterpret_cast<char*>(file.data_.data()), static_cast<std::streamsize>(file.data_.size()));
  if (!in) throw ArtifactError("weights file '" + path.string() + "' is truncated");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError("weights file '" + path.string() + "' has an unreadable header: " + e.what());
  }
  for (const auto& [name, entry] : j.items()) {
    if (name == "__metadata__") continue;
    TensorInfo info;
    info.dtype = entry.at("dtype").get<std::string>();
    info.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = entry.at("data_offsets").get<std::vector<std::size_t>>();
    if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > file.data_.size())
      throw ArtifactError("tensor '" + name + "' has offsets outside the data section");
    info.begin = offsets[0];
    info.end = offsets[1];
    file.tensors_.emplace(name, std::move(info));
  }
  return file;
}

const TensorInfo& SafetensorsFile::info(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ArtifactError("tensor '" + name + "' not found in '" + path_ + "'");
  return it->second;
}

std::vector<float> SafetensorsFile::load_f32(const std::string& name, const std::vector<std::int64_t>& expected_shape) const {
  const auto& t = info(name);
  if (!expected_shape.empty() && t.shape != expected_shape)
    throw ArtifactError("tensor '" + name + "' has shape " + shape_string(t.shape) + ", expected " +
                        shape_string(expected_shape));
  const auto n = static_cast<std::size_t>(t.element_count());
  std::size_t width = 0;
  if (t.dtype == "F32") width = 4;
  else if (t.dtype == "F16" || t.dtype == "BF16") width = 2;
  else throw ArtifactError("tensor '" + name + "' has unsupported dtype " + t.dtype);
  if (t.end - t.begin != n * width)
    throw ArtifactError("tensor '" + name + "' byte size does not match its shape");

  std::vector<float> out(n);
  const unsigned char* src = data_.data() + t.begin;
  static_assert(std::endian::native == std::endian::little, "safetensors data is little-endian");
  if (width == 4) {
    std::memcpy(out.data(), src, n * 4);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, src + 2 * i, 2);
      out[i] = t.dtype == "F16" ? half_to_float(v) : std::bit_cast<float>(static_cast<std::uint32_t>(v) << 16);
    }
  }
  return out;
}

}  // namespace crossprune
