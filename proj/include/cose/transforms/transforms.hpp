// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cose/image.hpp"
#include "cose/random.hpp"

namespace cose::transforms {

enum class TransformKind { kGeometric, kPhotometric };

enum class TransformName {
  kBlur,
  kContrast,
  kBrightness,
  kEqualize,
  kSmooth,
  kSharpness,
  kColor,
  kTranslateX,
  kTranslateY,
  kRotate,
  kFlipLr,
};

inline constexpr int kMagnitudeLevels = 61;
inline constexpr int kMaxMagnitudeIndex = kMagnitudeLevels - 1;

inline constexpr std::array kAllTransforms = {
    TransformName::kBlur,       TransformName::kContrast,   TransformName::kBrightness,
    TransformName::kEqualize,   TransformName::kSmooth,     TransformName::kSharpness,
    TransformName::kColor,      TransformName::kTranslateX, TransformName::kTranslateY,
    TransformName::kRotate,     TransformName::kFlipLr,
};

TransformKind kind_of(TransformName name) noexcept;
std::string_view name_of(TransformName name) noexcept;
TransformName parse_name(std::string_view text);
// False for fixed-magnitude transforms (equalize, flip_lr).
bool is_ranged(TransformName name) noexcept;
// True where the magnitude has a direction (enhancement factors, rotation, translation).
bool is_signed(TransformName name) noexcept;

struct TransformSpec {
  TransformName name = TransformName::kBrightness;
  int magnitude_index = 0;
  bool negated = false;

  TransformKind kind() const noexcept { return kind_of(name); }

  /// `name:magnitude_index:sign`, sign being '+' or '-'.
  std::string to_string() const;
  static TransformSpec parse(std::string_view text);

  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

/// Uniform over the eleven transforms and the 61 magnitude levels, with a
/// random direction for signed transforms. Fixed-magnitude transforms carry
/// magnitude_index 0.
TransformSpec sample_transform(std::uint64_t seed);
TransformSpec sample_transform(Rng& rng);

/// Signed fraction of the maximum magnitude, in [-1, 1].
double magnitude_fraction(const TransformSpec& spec) noexcept;
/// Enhancement factor for brightness/color/contrast/sharpness: 1 +/- 0.99 * fraction.
double enhancement_factor(const TransformSpec& spec) noexcept;
/// Rotation in degrees, in [-30, 30].
double rotation_degrees(const TransformSpec& spec) noexcept;
/// Integer pixel shift: fraction * 10% of the side, rounded.
int translation_pixels(const TransformSpec& spec, int side) noexcept;
/// Gaussian sigma in [0, 2].
double blur_sigma(const TransformSpec& spec) noexcept;

/// Applies `spec` to an image with values in [0, 1]; the result is clamped
/// to [0, 1]. Out-of-frame pixels of rotations/translations take `fill`
/// (one value per channel; empty means 0.5 gray).
Image apply(const TransformSpec& spec, const Image& image, std::span<const float> fill = {});

/// Forward geometric warp of a map (identity for photometric specs). Out of
/// frame pixels are 0 and marked invalid in the returned map's mask.
SaliencyMap warp_map(const TransformSpec& spec, const SaliencyMap& map);

struct InvertedMap {
  SaliencyMap map;  // map.mask == mask
  ValidityMask mask;
};

/// Pulls a map computed on t(x) back into the frame of x. Photometric specs
/// return the map unchanged with an all-true mask; geometric specs resample
/// through the exact inverse transform (bilinear) and mark pixels whose
/// preimage falls outside the frame.
InvertedMap invert_on_map(const TransformSpec& spec, const SaliencyMap& map);

// Building blocks, exposed for reuse by saliency methods and tests.
void gaussian_blur_plane(std::span<const float> src, std::span<float> dst, int height, int width,
                         double sigma);
Image gaussian_blur(const Image& image, double sigma);
double total_variation(const Image& image);

}  // namespace cose::transforms
