// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flextime::app {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2 };

std::size_t dtype_size(DType dtype);

/// A named little-endian tensor. The payload is kept in its on-disk encoding.
struct Tensor {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t element_count() const;

  static Tensor from_doubles(std::string name, std::vector<std::uint32_t> dims, std::span<const double> values,
                             DType storage);
  static Tensor from_bytes(std::string name, std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values);

  /// Decodes any dtype to doubles.
  std::vector<double> to_doubles() const;
};

/// "FLXT" file: u16 version, u16 tensor count, then the tensors in order.
struct TensorContainer {
  static constexpr std::uint16_t kVersion = 1;

  std::vector<Tensor> tensors;

  void add(Tensor tensor);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
};

std::vector<std::uint8_t> encode(const TensorContainer& container);
TensorContainer decode(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames, so readers never see a partial file.
void write_container(const TensorContainer& container, const std::filesystem::path& path);
TensorContainer read_container(const std::filesystem::path& path);

}  // namespace flextime::app
