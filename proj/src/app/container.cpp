// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/app/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "flextime/error.hpp"

namespace flextime::app {
namespace {

constexpr char kMagic[4] = {'F', 'L', 'X', 'T'};

template <class U>
void put(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) detail::fail(std::string("container: truncated while reading ") + what);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t product(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32:
      return 4;
    case DType::F64:
      return 8;
    case DType::U8:
      return 1;
  }
  detail::fail("container: unknown dtype code " + std::to_string(static_cast<int>(dtype)));
}

std::size_t Tensor::element_count() const { return product(dims); }

Tensor Tensor::from_doubles(std::string name, std::vector<std::uint32_t> dims, std::span<const double> values,
                            DType storage) {
  detail::require(product(dims) == values.size(), "container: tensor '" + name + "' dims do not match its values");
  Tensor t{std::move(name), storage, std::move(dims), {}};
  t.payload.reserve(values.size() * dtype_size(storage));
  for (double v : values) {
    switch (storage) {
      case DType::F32:
        put(t.payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        break;
      case DType::F64:
        put(t.payload, std::bit_cast<std::uint64_t>(v));
        break;
      case DType::U8:
        detail::require(v >= 0.0 && v <= 255.0 && v == static_cast<double>(static_cast<std::uint8_t>(v)),
                        "container: value does not fit u8 in tensor '" + t.name + "'");
        t.payload.push_back(static_cast<std::uint8_t>(v));
        break;
    }
  }
  return t;
}

Tensor Tensor::from_bytes(std::string name, std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values) {
  detail::require(product(dims) == values.size(), "container: tensor '" + name + "' dims do not match its values");
  return Tensor{std::move(name), DType::U8, std::move(dims), {values.begin(), values.end()}};
}

std::vector<double> Tensor::to_doubles() const {
  const std::size_t n = element_count();
  std::vector<double> out(n);
  Reader r(payload);
  for (std::size_t i = 0; i < n; ++i) {
    switch (dtype) {
      case DType::F32:
        out[i] = std::bit_cast<float>(r.get<std::uint32_t>("f32 payload"));
        break;
      case DType::F64:
        out[i] = std::bit_cast<double>(r.get<std::uint64_t>("f64 payload"));
        break;
      case DType::U8:
        out[i] = r.get<std::uint8_t>("u8 payload");
        break;
    }
  }
  return out;
}

void TensorContainer::add(Tensor tensor) {
  detail::require(!contains(tensor.name), "container: duplicate tensor name '" + tensor.name + "'");
  detail::require(tensor.payload.size() == tensor.element_count() * dtype_size(tensor.dtype),
                  "container: payload size mismatch for tensor '" + tensor.name + "'");
  tensors.push_back(std::move(tensor));
}

bool TensorContainer::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

const Tensor& TensorContainer::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  detail::fail("container: no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode(const TensorContainer& c) {
  detail::require(c.tensors.size() <= 0xffff, "container: too many tensors");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint16_t>(out, TensorContainer::kVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    detail::require(t.name.size() <= 0xffff, "container: tensor name too long");
    detail::require(t.dims.size() <= 0xff, "container: tensor rank too large");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dtype));
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint32_t>(out, d);
    out.insert(out.end(), t.payload.begin(), t.payload.end());
  }
  return out;
}

TensorContainer decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  detail::require(std::memcmp(magic.data(), kMagic, 4) == 0, "container: bad magic (not a FLXT file)");
  const auto version = r.get<std::uint16_t>("version");
  detail::require(version == TensorContainer::kVersion,
                  "container: unsupported format version " + std::to_string(version));
  const auto count = r.get<std::uint16_t>("tensor count");
  TensorContainer c;
  for (std::size_t i = 0; i < count; ++i) {
    Tensor t;
    const auto name_len = r.get<std::uint16_t>("name length");
    const auto name = r.take(name_len, "name");
    t.name.assign(name.begin(), name.end());
    const auto code = r.get<std::uint8_t>("dtype");
    detail::require(code <= 2, "container: unknown dtype code " + std::to_string(code) + " in '" + t.name + "'");
    t.dtype = static_cast<DType>(code);
    const auto rank = r.get<std::uint8_t>("rank");
    for (std::size_t d = 0; d < rank; ++d) t.dims.push_back(r.get<std::uint32_t>("dims"));
    const auto payload = r.take(t.element_count() * dtype_size(t.dtype), "payload");
    t.payload.assign(payload.begin(), payload.end());
    c.add(std::move(t));
  }
  detail::require(r.done(), "container: trailing bytes after last tensor");
  return c;
}

void write_container(const TensorContainer& container, const std::filesystem::path& path) {
  const auto bytes = encode(container);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

TensorContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail("cannot open container '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const ValidationError& e) {
    detail::fail(path.string() + ": " + e.what());
  }
}

}  // namespace flextime::app
