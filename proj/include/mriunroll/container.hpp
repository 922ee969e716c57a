// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mriunroll/tensor.hpp"

namespace mriunroll {

enum class Dtype { float64, complex128 };

struct ContainerEntry {
  std::string name;
  ComplexTensor tensor;
  Dtype dtype = Dtype::complex128;
  nlohmann::json attrs = nlohmann::json::object();
};

/// Binary tensor bundle.
///
/// Layout: 8-byte magic "MRIUNRL1", u64 little-endian header length, UTF-8
/// JSON header, then each entry's payload as raw little-endian doubles
/// (float64: real parts only; complex128: interleaved re/im). The header
/// records name, dtype, shape, byte offset and attrs of every entry plus a
/// free-form `meta` object.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<ContainerEntry> entries;

  const ContainerEntry& at(const std::string& name) const;
  const ContainerEntry* find(const std::string& name) const;
};

// float64 when every imaginary part is exactly zero.
Dtype natural_dtype(const ComplexTensor& t);

std::string encode_container(const Container& c);
Container decode_container(const std::string& bytes);
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

}  // namespace mriunroll
