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

#include "gpcnn/pipeline/checkpoint.hpp"

#include <algorithm>
#include <array>

#include "container.hpp"
#include "gpcnn/error.hpp"

namespace gpcnn {
namespace {

constexpr char kMagic[] = "GPCNNCKP";

void append(std::vector<double>& out, const Tensor& t) {
  const auto v = t.values();
  out.insert(out.end(), v.begin(), v.end());
}

struct Decoded {
  nlohmann::json manifest;
  std::vector<double> payload;
};

Decoded decode(const std::string& bytes) {
  auto c = container::decode(bytes, {kMagic, 8}, kCheckpointVersion);
  const auto& m = c.manifest;
  GPCNN_REQUIRE(m.is_object() && m.contains("config") && m.contains("parameters") &&
              m.contains("payload_checksum") && m.at("parameters").is_array(),
          ErrorCode::kCorruptCheckpoint, "manifest is missing required fields");
  GPCNN_REQUIRE(m.at("payload_checksum") == container::fnv1a_hex(c.payload), ErrorCode::kCorruptCheckpoint,
          "payload checksum does not match the manifest");
  return {std::move(c.manifest), std::move(c.payload)};
}

void restore(Model& model, const Decoded& d) {
  ParameterStore& store = model.store();
  const auto& entries = d.manifest.at("parameters");
  GPCNN_REQUIRE(entries.size() == store.size(), ErrorCode::kShapeMismatch,
          "checkpoint has " + std::to_string(entries.size()) + " parameters, model has " +
              std::to_string(store.size()));
  std::size_t elements = 0;
  try {
    for (std::size_t i = 0; i < store.size(); ++i) {
      const Parameter& p = store[i];
      const auto name = entries[i].at("name").get<std::string>();
      const auto shape = entries[i].at("shape").get<Shape>();
      GPCNN_REQUIRE(name == p.name, ErrorCode::kShapeMismatch,
              "parameter " + std::to_string(i) + " is '" + name + "' in the checkpoint, '" + p.name +
                  "' in the model");
      GPCNN_REQUIRE(shape == p.value.shape(), ErrorCode::kShapeMismatch,
              "parameter '" + p.name + "' has shape " + to_string(shape) + " in the checkpoint, " +
                  to_string(p.value.shape()) + " in the model");
      GPCNN_REQUIRE(entries[i].at("dtype") == "f64le", ErrorCode::kCorruptCheckpoint,
              "parameter '" + p.name + "' has unsupported dtype");
      elements += element_count(shape);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptCheckpoint, std::string("manifest: ") + e.what());
  }
  GPCNN_REQUIRE(d.payload.size() == 3 * elements, ErrorCode::kCorruptCheckpoint,
          "payload holds " + std::to_string(d.payload.size()) + " doubles, manifest declares " +
              std::to_string(3 * elements));
  auto it = d.payload.begin();
  constexpr std::array<Tensor Parameter::*, 3> kSections = {&Parameter::value, &Parameter::first_moment,
                                                            &Parameter::second_moment};
  for (auto section : kSections) {
    for (Parameter& p : store) {
      Tensor& t = p.*section;
      std::copy_n(it, t.size(), t.data());
      it += static_cast<std::ptrdiff_t>(t.size());
    }
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    store[i].step = entries[i].at("step").get<std::int64_t>();
    store[i].grad.fill(0.0);
  }
}

}  // namespace

std::string encode_checkpoint(const Model& model) {
  const ParameterStore& store = model.store();
  nlohmann::json params = nlohmann::json::array();
  std::vector<double> payload;
  std::int64_t step = 0;
  for (const Parameter& p : store) {
    params.push_back({{"name", p.name},
                      {"shape", p.value.shape()},
                      {"dtype", "f64le"},
                      {"trainable", p.trainable},
                      {"step", p.step}});
    step = std::max(step, p.step);
    append(payload, p.value);
  }
  for (const Parameter& p : store) append(payload, p.first_moment);
  for (const Parameter& p : store) append(payload, p.second_moment);
  const nlohmann::json manifest = {{"format_version", kCheckpointVersion},
                                   {"config", model.config().to_json()},
                                   {"config_hash", model.config().hash()},
                                   {"optimizer_step", step},
                                   {"parameters", params},
                                   {"payload_doubles", payload.size()},
                                   {"payload_checksum", container::fnv1a_hex(payload)}};
  return container::encode({kMagic, 8}, kCheckpointVersion, manifest, payload);
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  container::write_file(path, encode_checkpoint(model));
}

Model decode_checkpoint(const std::string& bytes) {
  const Decoded d = decode(bytes);
  RunConfig config;
  try {
    config = RunConfig::from_json(d.manifest.at("config"));
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptCheckpoint, std::string("stored config: ") + e.what());
  }
  Model model(config);
  restore(model, d);
  return model;
}

Model load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(container::read_file(path));
}

void load_checkpoint_into(Model& model, const std::filesystem::path& path) {
  restore(model, decode(container::read_file(path)));
}

}  // namespace gpcnn
