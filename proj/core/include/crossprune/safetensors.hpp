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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace crossprune {

struct TensorInfo {
  std::string dtype;  // "F32", "F16" or "BF16"
  std::vector<std::int64_t> shape;
  std::size_t begin = 0;  // byte offsets into the data section
  std::size_t end = 0;

  std::int64_t element_count() const;
};

/// Reader for the safetensors container: an 8-byte little-endian header
/// length, a JSON header, then raw tensor bytes.
class SafetensorsFile {
 public:
  static SafetensorsFile open(const std::filesystem::path& path);

  bool contains(const std::string& name) const { return tensors_.contains(name); }
  const TensorInfo& info(const std::string& name) const;
  const std::map<std::string, TensorInfo>& tensors() const noexcept { return tensors_; }

  /// Tensor converted to float32, row-major. Throws ArtifactError when the
  /// tensor is missing or its shape differs from `expected_shape` (if given).
  std::vector<float> load_f32(const std::string& name, const std::vector<std::int64_t>& expected_shape = {}) const;

 private:
  std::map<std::string, TensorInfo> tensors_;
  std::vector<unsigned char> data_;
  std::string path_;
};

}  // namespace crossprune
