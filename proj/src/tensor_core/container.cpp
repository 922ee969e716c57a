// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

constexpr char kMagic[8] = {'M', 'R', 'I', 'U', 'N', 'R', 'L', '1'};

static_assert(std::endian::native == std::endian::little, "little-endian host required");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_double(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

double get_double(const char* p) {
  double v;
  std::memcpy(&v, p, 8);
  return v;
}

const char* dtype_name(Dtype d) { return d == Dtype::float64 ? "float64" : "complex128"; }

Dtype dtype_from(const std::string& s) {
  if (s == "float64") return Dtype::float64;
  if (s == "complex128") return Dtype::complex128;
  throw ConfigError("container: unknown dtype '" + s + "'");
}

}  // namespace

const ContainerEntry& Container::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw ConfigError("container: no entry named '" + name + "'");
}

const ContainerEntry* Container::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

Dtype natural_dtype(const ComplexTensor& t) {
  for (const auto& v : t.data()) {
    if (v.imag() != 0.0) return Dtype::complex128;
  }
  return Dtype::float64;
}

std::string encode_container(const Container& c) {
  nlohmann::json header;
  header["meta"] = c.meta;
  header["entries"] = nlohmann::json::array();
  std::string payload;
  for (const auto& e : c.entries) {
    if (e.dtype == Dtype::float64 && natural_dtype(e.tensor) != Dtype::float64) {
      throw ConfigError("container: entry '" + e.name + "' has imaginary parts but float64 dtype");
    }
    header["entries"].push_back({{"name", e.name},
                                 {"dtype", dtype_name(e.dtype)},
                                 {"shape", e.tensor.shape()},
                                 {"offset", payload.size()},
                                 {"attrs", e.attrs}});
    for (const auto& v : e.tensor.data()) {
      put_double(payload, v.real());
      if (e.dtype == Dtype::complex128) put_double(payload, v.imag());
    }
  }
  const std::string text = header.dump();
  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Container decode_container(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw ConfigError("container: bad magic");
  }
  std::uint64_t len;
  std::memcpy(&len, bytes.data() + 8, 8);
  if (16 + len > bytes.size()) throw ConfigError("container: truncated header");
  const auto header = nlohmann::json::parse(bytes.substr(16, len));
  const std::size_t base = 16 + len;

  Container c;
  c.meta = header.at("meta");
  for (const auto& h : header.at("entries")) {
    ContainerEntry e;
    e.name = h.at("name").get<std::string>();
    e.dtype = dtype_from(h.at("dtype").get<std::string>());
    e.attrs = h.value("attrs", nlohmann::json::object());
    const Shape shape = h.at("shape").get<Shape>();
    const std::size_t n = shape_numel(shape);
    const std::size_t width = e.dtype == Dtype::float64 ? 8 : 16;
    const std::size_t offset = base + h.at("offset").get<std::size_t>();
    if (offset + n * width > bytes.size()) {
      throw ConfigError("container: entry '" + e.name + "' exceeds file size");
    }
    std::vector<cdouble> data(n);
    const char* p = bytes.data() + offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (e.dtype == Dtype::float64) {
        data[i] = get_double(p + 8 * i);
      } else {
        data[i] = {get_double(p + 16 * i), get_double(p + 16 * i + 8)};
      }
    }
    e.tensor = ComplexTensor(shape, std::move(data));
    c.entries.push_back(std::move(e));
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_container(c);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_container(ss.str());
}

}  // namespace mriunroll
