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

#ifndef GPCNN_PIPELINE_CHECKPOINT_HPP_
#define GPCNN_PIPELINE_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "gpcnn/pipeline/model.hpp"

namespace gpcnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serialized model: see README for the byte layout. Deterministic, so
/// identical models give identical bytes.
std::string encode_checkpoint(const Model& model);
void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Rebuilds the model from the config stored in the manifest.
Model decode_checkpoint(const std::string& bytes);
Model load_checkpoint(const std::filesystem::path& path);

/// Loads parameters and optimizer state into an existing model. Throws
/// kShapeMismatch naming the first parameter whose name or shape differs.
void load_checkpoint_into(Model& model, const std::filesystem::path& path);

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_CHECKPOINT_HPP_
