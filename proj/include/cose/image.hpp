// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cose {

/// A planar (channel, row, column) float image. Pixel values are nominally in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  float& at(int c, int y, int x) { return data[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data[index(c, y, x)]; }

  std::span<float> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const Image& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Per-pixel flags, 1 where an inverse-warped map carries real data.
struct ValidityMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> valid;

  ValidityMask() = default;
  ValidityMask(int h, int w, bool value = true)
      : height(h), width(w), valid(static_cast<std::size_t>(h) * w, value ? 1 : 0) {}

  bool at(int y, int x) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v) { valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count_valid() const;
  bool all_valid() const { return count_valid() == valid.size(); }
  friend bool operator==(const ValidityMask&, const ValidityMask&) = default;
};

/// A 2-D attribution map with values in [0, 1].
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;
  std::string method;
  int target_class = -1;
  ValidityMask mask;

  SaliencyMap() = default;
  SaliencyMap(int h, int w, float fill = 0.0f)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill), mask(h, w, true) {}

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Min-max rescales `raw` to [0, 1]. A constant input maps to all 0.5.
std::vector<float> normalize_min_max(std::span<const float> raw);
std::vector<float> normalize_min_max(std::span<const double> raw);

}  // namespace cose
