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

#include "container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gpcnn/error.hpp"

namespace gpcnn::container {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    GPCNN_REQUIRE(n <= remaining(), ErrorCode::kCorruptCheckpoint,
            std::string("truncated container while reading ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode(std::string_view magic, std::uint32_t version, const nlohmann::json& manifest,
                   std::span<const double> payload) {
  const std::string text = manifest.dump();
  std::string out(magic);
  put<std::uint32_t>(out, version);
  put<std::uint64_t>(out, text.size());
  out += text;
  put<std::uint64_t>(out, payload.size());
  out.append(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(double));
  return out;
}

Contents decode(std::string_view bytes, std::string_view magic, std::uint32_t expected_version) {
  Reader in(bytes);
  GPCNN_REQUIRE(in.take(magic.size(), "magic") == magic, ErrorCode::kCorruptCheckpoint,
          "bad magic, expected " + std::string(magic));
  Contents c;
  c.version = in.get<std::uint32_t>("version");
  GPCNN_REQUIRE(c.version == expected_version, ErrorCode::kVersionMismatch,
          "format version " + std::to_string(c.version) + ", this build reads " +
              std::to_string(expected_version));
  const auto manifest_size = in.get<std::uint64_t>("manifest length");
  const auto text = in.take(manifest_size, "manifest");
  try {
    c.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kCorruptCheckpoint, std::string("manifest: ") + e.what());
  }
  const auto count = in.get<std::uint64_t>("payload length");
  GPCNN_REQUIRE(count <= in.remaining() / sizeof(double), ErrorCode::kCorruptCheckpoint,
          "truncated payload: " + std::to_string(count) + " doubles declared, " +
              std::to_string(in.remaining() / sizeof(double)) + " present");
  const auto raw = in.take(count * sizeof(double), "payload");
  c.payload.resize(count);
  std::memcpy(c.payload.data(), raw.data(), raw.size());
  GPCNN_REQUIRE(in.remaining() == 0, ErrorCode::kCorruptCheckpoint,
          std::to_string(in.remaining()) + " trailing bytes after payload");
  return c;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  // Write beside the target and rename so a crash never leaves a partial file.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    GPCNN_REQUIRE(out.good(), ErrorCode::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    GPCNN_REQUIRE(out.good(), ErrorCode::kIo, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  GPCNN_REQUIRE(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(std::span<const double> payload) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < payload.size() * sizeof(double); ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gpcnn::container
