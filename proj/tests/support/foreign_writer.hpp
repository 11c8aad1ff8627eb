// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// A container writer that shares no code with the engine, standing in for
// a file produced by another toolchain. Bytes are emitted one by one from
// the published layout.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace cose::testing {

class ForeignWriter {
 public:
  void add(const std::string& name, std::vector<std::uint64_t> dims, const std::vector<float>& values) {
    items_.push_back({name, std::move(dims), values});
  }

  std::vector<unsigned char> bytes(const std::string& metadata_json) const {
    std::vector<unsigned char> out = {'C', 'O', 'S', 'E'};
    u32(out, 1);
    u32(out, static_cast<std::uint32_t>(items_.size()));
    for (const auto& it : items_) {
      u32(out, static_cast<std::uint32_t>(it.name.size()));
      out.insert(out.end(), it.name.begin(), it.name.end());
      u32(out, static_cast<std::uint32_t>(it.dims.size()));
      for (auto d : it.dims) {
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(d >> (8 * b)));
      }
      out.push_back(1);
      for (float f : it.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(out, bits);
      }
    }
    u32(out, static_cast<std::uint32_t>(metadata_json.size()));
    out.insert(out.end(), metadata_json.begin(), metadata_json.end());
    return out;
  }

  void save(const std::string& path, const std::string& metadata_json) const {
    const auto b = bytes(metadata_json);
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                                 static_cast<std::streamsize>(b.size()));
  }

 private:
  struct Item {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> values;
  };
  static void u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  std::vector<Item> items_;
};

}  // namespace cose::testing
