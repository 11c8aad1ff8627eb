// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/transforms/transforms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "cose/error.hpp"
#include "cose/gaussian.hpp"

namespace cose::transforms {

TransformKind kind_of(TransformName name) noexcept {
  switch (name) {
    case TransformName::kTranslateX:
    case TransformName::kTranslateY:
    case TransformName::kRotate:
    case TransformName::kFlipLr:
      return TransformKind::kGeometric;
    default:
      return TransformKind::kPhotometric;
  }
}

std::string_view name_of(TransformName name) noexcept {
  switch (name) {
    case TransformName::kBlur: return "blur";
    case TransformName::kContrast: return "contrast";
    case TransformName::kBrightness: return "brightness";
    case TransformName::kEqualize: return "equalize";
    case TransformName::kSmooth: return "smooth";
    case TransformName::kSharpness: return "sharpness";
    case TransformName::kColor: return "color";
    case TransformName::kTranslateX: return "translate_x";
    case TransformName::kTranslateY: return "translate_y";
    case TransformName::kRotate: return "rotate";
    case TransformName::kFlipLr: return "flip_lr";
  }
  return "unknown";
}

TransformName parse_name(std::string_view text) {
  for (TransformName n : kAllTransforms) {
    if (name_of(n) == text) return n;
  }
  throw Error(Errc::kInvalidArgument, "unknown transform '" + std::string(text) + "'");
}

bool is_ranged(TransformName name) noexcept {
  return name != TransformName::kEqualize && name != TransformName::kFlipLr;
}

bool is_signed(TransformName name) noexcept {
  switch (name) {
    case TransformName::kBrightness:
    case TransformName::kColor:
    case TransformName::kContrast:
    case TransformName::kSharpness:
    case TransformName::kRotate:
    case TransformName::kTranslateX:
    case TransformName::kTranslateY:
      return true;
    default:
      return false;
  }
}

std::string TransformSpec::to_string() const {
  return std::string(name_of(name)) + ":" + std::to_string(magnitude_index) + ":" + (negated ? "-" : "+");
}

TransformSpec TransformSpec::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos || text.find(':', second + 1) != std::string_view::npos) {
    throw Error(Errc::kInvalidArgument, "transform record must be name:magnitude_index:sign, got '" +
                                            std::string(text) + "'");
  }
  TransformSpec spec;
  spec.name = parse_name(text.substr(0, first));
  const auto digits = text.substr(first + 1, second - first - 1);
  int index = -1;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || index < 0 || index > kMaxMagnitudeIndex) {
    throw Error(Errc::kInvalidArgument, "magnitude index must be in [0, 60], got '" + std::string(digits) + "'");
  }
  spec.magnitude_index = index;
  const auto sign = text.substr(second + 1);
  if (sign != "+" && sign != "-") throw Error(Errc::kInvalidArgument, "sign must be '+' or '-'");
  spec.negated = sign == "-";
  return spec;
}

TransformSpec sample_transform(Rng& rng) {
  TransformSpec spec;
  spec.name = kAllTransforms[rng.below(kAllTransforms.size())];
  const int index = static_cast<int>(rng.below(kMagnitudeLevels));
  const bool negate = rng.coin();
  spec.magnitude_index = is_ranged(spec.name) ? index : 0;
  spec.negated = is_signed(spec.name) && negate;
  return spec;
}

TransformSpec sample_transform(std::uint64_t seed) {
  Rng rng(seed);
  return sample_transform(rng);
}

double magnitude_fraction(const TransformSpec& spec) noexcept {
  if (!is_ranged(spec.name)) return 0.0;
  const double f = static_cast<double>(spec.magnitude_index) / kMaxMagnitudeIndex;
  return (is_signed(spec.name) && spec.negated) ? -f : f;
}

double enhancement_factor(const TransformSpec& spec) noexcept { return 1.0 + 0.99 * magnitude_fraction(spec); }

double rotation_degrees(const TransformSpec& spec) noexcept { return 30.0 * magnitude_fraction(spec); }

int translation_pixels(const TransformSpec& spec, int side) noexcept {
  return static_cast<int>(std::lround(magnitude_fraction(spec) * 0.10 * side));
}

double blur_sigma(const TransformSpec& spec) noexcept { return 2.0 * magnitude_fraction(spec); }

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Affine pull-back: output pixel (x, y) reads the source at
// (ax*x + bx*y + cx, ay*x + by*y + cy).
struct PullBack {
  double ax = 1, bx = 0, cx = 0;
  double ay = 0, by = 1, cy = 0;
};

PullBack pull_back(const TransformSpec& spec, int height, int width, bool inverse) {
  PullBack p;
  const double sign = inverse ? -1.0 : 1.0;
  switch (spec.name) {
    case TransformName::kTranslateX:
      p.cx = -sign * translation_pixels(spec, width);
      break;
    case TransformName::kTranslateY:
      p.cy = -sign * translation_pixels(spec, height);
      break;
    case TransformName::kRotate: {
      // Positive angles turn counter-clockwise on screen (y axis down), so the
      // forward pull-back reads the source through R(theta) about the centre.
      const double theta = sign * rotation_degrees(spec) * std::numbers::pi / 180.0;
      const double c = std::cos(theta), s = std::sin(theta);
      const double ox = (width - 1) / 2.0, oy = (height - 1) / 2.0;
      p.ax = c;
      p.bx = -s;
      p.cx = ox - c * ox + s * oy;
      p.ay = s;
      p.by = c;
      p.cy = oy - s * ox - c * oy;
      break;
    }
    case TransformName::kFlipLr:
      p.ax = -1;
      p.cx = width - 1;
      break;
    default:
      break;
  }
  return p;
}

constexpr double kFrameEps = 1e-6;

// Bilinear read; returns false when (qx, qy) lies outside the pixel-centre frame.
bool sample(std::span<const float> plane, int height, int width, double qx, double qy, float* out) {
  if (qx < -kFrameEps || qy < -kFrameEps || qx > width - 1 + kFrameEps || qy > height - 1 + kFrameEps) {
    return false;
  }
  qx = std::clamp(qx, 0.0, static_cast<double>(width - 1));
  qy = std::clamp(qy, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(std::floor(qx)), std::max(width - 2, 0));
  const int y0 = std::min(static_cast<int>(std::floor(qy)), std::max(height - 2, 0));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = width > 1 ? qx - x0 : 0.0;
  const double fy = height > 1 ? qy - y0 : 0.0;
  const auto at = [&](int y, int x) { return static_cast<double>(plane[static_cast<std::size_t>(y) * width + x]); };
  if (fx == 0.0 && fy == 0.0) {
    *out = plane[static_cast<std::size_t>(y0) * width + x0];
    return true;
  }
  const double top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
  const double bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
  *out = static_cast<float>(top * (1.0 - fy) + bottom * fy);
  return true;
}

// Resamples one plane; `valid` (may be null) receives the in-frame flags.
void warp_plane(std::span<const float> src, std::span<float> dst, int height, int width, const PullBack& p,
                float fill, std::vector<std::uint8_t>* valid) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      float v;
      const bool inside = sample(src, height, width, p.ax * x + p.bx * y + p.cx, p.ay * x + p.by * y + p.cy, &v);
      dst[i] = inside ? v : fill;
      if (valid) (*valid)[i] = inside ? 1 : 0;
    }
  }
}

void flip_plane(std::span<const float> src, std::span<float> dst, int height, int width) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      dst[static_cast<std::size_t>(y) * width + x] = src[static_cast<std::size_t>(y) * width + (width - 1 - x)];
    }
  }
}

std::vector<double> luminance(const Image& img) {
  std::vector<double> gray(img.plane_size());
  if (img.channels >= 3) {
    for (std::size_t i = 0; i < gray.size(); ++i) {
      gray[i] = 0.299 * img.data[i] + 0.587 * img.data[img.plane_size() + i] + 0.114 * img.data[2 * img.plane_size() + i];
    }
  } else {
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = img.data[i];
  }
  return gray;
}

// out = base + factor * (img - base), clamped.
Image blend(const Image& img, const Image& base, double factor) {
  Image out(img.channels, img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp01(base.data[i] + factor * (static_cast<double>(img.data[i]) - base.data[i]));
  }
  return out;
}

Image convolve3x3(const Image& img, const std::array<double, 9>& k, bool replicate_border) {
  Image out = img;
  double norm = 0.0;
  for (double v : k) norm += v;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const bool border = y == 0 || x == 0 || y == img.height - 1 || x == img.width - 1;
        if (border && !replicate_border) continue;
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            s += k[(dy + 1) * 3 + dx + 1] *
                 img.at(c, clamp_index(y + dy, img.height), clamp_index(x + dx, img.width));
          }
        }
        out.at(c, y, x) = static_cast<float>(s / norm);
      }
    }
  }
  return out;
}

// Histogram equalization on 256 levels per channel, following the
// cumulative-histogram lookup used by common image libraries. Channels whose
// histogram has a single populated bin are left untouched.
Image equalize(const Image& img) {
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    auto plane = img.plane(c);
    std::array<std::size_t, 256> hist{};
    std::vector<int> level(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i) {
      level[i] = static_cast<int>(std::lround(std::clamp(static_cast<double>(plane[i]), 0.0, 1.0) * 255.0));
      ++hist[level[i]];
    }
    std::size_t last_nonzero = 0, total = 0, populated = 0;
    for (std::size_t count : hist) {
      if (count) {
        last_nonzero = count;
        total += count;
        ++populated;
      }
    }
    if (populated <= 1) continue;
    const std::size_t step = (total - last_nonzero) / 255;
    if (step == 0) continue;
    std::array<int, 256> lut{};
    std::size_t n = step / 2;
    for (int i = 0; i < 256; ++i) {
      lut[i] = static_cast<int>(std::min<std::size_t>(n / step, 255));
      n += hist[i];
    }
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) dst[i] = static_cast<float>(lut[level[i]] / 255.0);
  }
  return out;
}

float fill_for(std::span<const float> fill, int channel) {
  if (fill.empty()) return 0.5f;
  return fill[std::min<std::size_t>(channel, fill.size() - 1)];
}

}  // namespace

void gaussian_blur_plane(std::span<const float> src, std::span<float> dst, int height, int width, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int k = 0; k < static_cast<int>(taps.size()); ++k) {
        s += taps[k] * src[static_cast<std::size_t>(y) * width + clamp_index(x + k - r, width)];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = s;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int k = 0; k < static_cast<int>(taps.size()); ++k) {
        s += taps[k] * tmp[static_cast<std::size_t>(clamp_index(y + k - r, height)) * width + x];
      }
      dst[static_cast<std::size_t>(y) * width + x] = static_cast<float>(s);
    }
  }
}

Image gaussian_blur(const Image& image, double sigma) {
  Image out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c) gaussian_blur_plane(image.plane(c), out.plane(c), image.height, image.width, sigma);
  return out;
}

double total_variation(const Image& img) {
  double tv = 0.0;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (x + 1 < img.width) tv += std::abs(static_cast<double>(img.at(c, y, x + 1)) - img.at(c, y, x));
        if (y + 1 < img.height) tv += std::abs(static_cast<double>(img.at(c, y + 1, x)) - img.at(c, y, x));
      }
    }
  }
  return tv;
}

Image apply(const TransformSpec& spec, const Image& image, std::span<const float> fill) {
  switch (spec.name) {
    case TransformName::kBrightness: {
      const double f = enhancement_factor(spec);
      if (f == 1.0) return image;
      Image out = image;
      for (float& v : out.data) v = clamp01(v * f);
      return out;
    }
    case TransformName::kColor: {
      const double f = enhancement_factor(spec);
      if (f == 1.0 || image.channels < 3) return image;
      const auto gray = luminance(image);
      Image base(image.channels, image.height, image.width);
      for (int c = 0; c < image.channels; ++c) {
        auto p = base.plane(c);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<float>(gray[i]);
      }
      return blend(image, base, f);
    }
    case TransformName::kContrast: {
      const double f = enhancement_factor(spec);
      if (f == 1.0) return image;
      const auto gray = luminance(image);
      double mean = 0.0;
      for (double g : gray) mean += g;
      mean /= static_cast<double>(gray.size());
      return blend(image, Image(image.channels, image.height, image.width, static_cast<float>(mean)), f);
    }
    case TransformName::kSharpness: {
      const double f = enhancement_factor(spec);
      if (f == 1.0) return image;
      return blend(image, convolve3x3(image, {1, 1, 1, 1, 5, 1, 1, 1, 1}, false), f);
    }
    case TransformName::kBlur: {
      const double sigma = blur_sigma(spec);
      if (sigma == 0.0) return image;
      Image out = gaussian_blur(image, sigma);
      for (float& v : out.data) v = clamp01(v);
      return out;
    }
    case TransformName::kSmooth: {
      const double m = magnitude_fraction(spec);
      if (m == 0.0) return image;
      const Image box = convolve3x3(image, {1, 1, 1, 1, 1, 1, 1, 1, 1}, true);
      return blend(box, image, m);
    }
    case TransformName::kEqualize:
      return equalize(image);
    case TransformName::kFlipLr: {
      Image out(image.channels, image.height, image.width);
      for (int c = 0; c < image.channels; ++c) flip_plane(image.plane(c), out.plane(c), image.height, image.width);
      return out;
    }
    case TransformName::kTranslateX:
    case TransformName::kTranslateY:
    case TransformName::kRotate: {
      if (magnitude_fraction(spec) == 0.0) return image;
      const PullBack p = pull_back(spec, image.height, image.width, false);
      Image out(image.channels, image.height, image.width);
      for (int c = 0; c < image.channels; ++c) {
        warp_plane(image.plane(c), out.plane(c), image.height, image.width, p, fill_for(fill, c), nullptr);
      }
      for (float& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
      return out;
    }
  }
  return image;
}

namespace {

SaliencyMap geometric_warp(const TransformSpec& spec, const SaliencyMap& map, bool inverse) {
  SaliencyMap out = map;
  out.mask = ValidityMask(map.height, map.width, true);
  if (spec.kind() != TransformKind::kGeometric) return out;
  if (spec.name == TransformName::kFlipLr) {
    flip_plane(map.values, out.values, map.height, map.width);
    return out;
  }
  const PullBack p = pull_back(spec, map.height, map.width, inverse);
  warp_plane(map.values, out.values, map.height, map.width, p, 0.0f, &out.mask.valid);
  return out;
}

}  // namespace

SaliencyMap warp_map(const TransformSpec& spec, const SaliencyMap& map) { return geometric_warp(spec, map, false); }

InvertedMap invert_on_map(const TransformSpec& spec, const SaliencyMap& map) {
  InvertedMap result;
  result.map = geometric_warp(spec, map, true);
  result.mask = result.map.mask;
  return result;
}

}  // namespace cose::transforms
