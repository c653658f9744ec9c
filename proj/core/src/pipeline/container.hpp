/* Copyright 2026 The gpcnn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Binary container shared by checkpoints and datasets:
//   8-byte magic, u32 format version, u64 manifest length, manifest (UTF-8
//   JSON), u64 payload length in doubles, payload (little-endian f64).
// All integers are little-endian.
#ifndef GPCNN_SRC_PIPELINE_CONTAINER_HPP_
#define GPCNN_SRC_PIPELINE_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gpcnn::container {

struct Contents {
  std::uint32_t version = 0;
  nlohmann::json manifest;
  std::vector<double> payload;
};

std::string encode(std::string_view magic, std::uint32_t version, const nlohmann::json& manifest,
                   std::span<const double> payload);

/// Throws kCorruptCheckpoint on a bad magic, truncation or trailing bytes and
/// kVersionMismatch when the version differs from `expected_version`.
Contents decode(std::string_view bytes, std::string_view magic, std::uint32_t expected_version);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

std::string fnv1a_hex(std::span<const double> payload);

}  // namespace gpcnn::container

#endif  // GPCNN_SRC_PIPELINE_CONTAINER_HPP_
