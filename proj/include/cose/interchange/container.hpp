// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cose::interchange {

inline constexpr char kMagic[4] = {'C', 'O', 'S', 'E'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

/// One named float32 tensor.
struct Entry {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
};

struct Container {
  std::vector<Entry> entries;
  nlohmann::json metadata = nlohmann::json::object();

  const Entry* find(std::string_view name) const;
};

// Byte layout (all integers little-endian):
//   "COSE" | u32 version | u32 entry_count
//   per entry: u32 name_len | name (UTF-8) | u32 rank | u64 dims[rank] | u8 dtype | payload
//   u32 metadata_len | metadata (UTF-8 JSON; empty when metadata is {})
std::vector<std::uint8_t> encode(const Container& container);
Container decode(std::span<const std::uint8_t> bytes);

void write(const Container& container, const std::filesystem::path& path);
Container read(const std::filesystem::path& path);

/// Throws cose::Error(kInvalidContainer / kDuplicateName) if the container
/// violates its invariants.
void validate(const Container& container);

}  // namespace cose::interchange
