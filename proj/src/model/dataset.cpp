// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/model/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "cose/error.hpp"
#include "cose/random.hpp"
#include "cose/transforms/transforms.hpp"

namespace cose::model {

namespace {

enum class Shape2d { kCircle, kSquare, kTriangle };

constexpr int kSuper = 4;  // supersampling per axis for anti-aliased edges

bool inside(Shape2d shape, double x, double y, double cx, double cy, double r) {
  const double dx = x - cx, dy = y - cy;
  switch (shape) {
    case Shape2d::kCircle:
      return dx * dx + dy * dy <= r * r;
    case Shape2d::kSquare:
      return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
    case Shape2d::kTriangle: {
      // Upright: apex at (0, -r), base from (-r, 0.8r) to (r, 0.8r).
      if (dy > 0.8 * r || dy < -r) return false;
      const double half = r * (dy + r) / (1.8 * r);
      return std::abs(dx) <= half;
    }
  }
  return false;
}

Image toy_image(Rng& rng, Shape2d shape, InputShape s) {
  const int c = s.channels, h = s.height, w = s.width;
  std::vector<double> base(c), fg(c);
  double gap = 0.0;
  do {
    gap = 0.0;
    for (int k = 0; k < c; ++k) {
      base[k] = rng.uniform(0.1, 0.9);
      fg[k] = rng.uniform(0.05, 0.95);
      gap += std::abs(base[k] - fg[k]);
    }
  } while (gap < 0.35 * c);

  Image img(c, h, w);
  // Smooth texture: blurred white noise per channel.
  for (int k = 0; k < c; ++k) {
    std::vector<float> noise(img.plane_size());
    for (float& v : noise) v = static_cast<float>(rng.normal());
    transforms::gaussian_blur_plane(noise, img.plane(k), h, w, 1.5);
    for (float& v : img.plane(k)) v = static_cast<float>(base[k] + 0.08 * v);
  }

  const double side = std::min(h, w);
  const double r = rng.uniform(0.25, 0.38) * side;
  const double cx = rng.uniform(r + 1, w - r - 1);
  const double cy = rng.uniform(r + 1, h - r - 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          hits += inside(shape, x + (sx + 0.5) / kSuper - 0.5, y + (sy + 0.5) / kSuper - 0.5, cx, cy, r);
        }
      }
      const double a = static_cast<double>(hits) / (kSuper * kSuper);
      for (int k = 0; k < c; ++k) {
        const double v = (1 - a) * img.at(k, y, x) + a * fg[k] + 0.02 * rng.normal();
        img.at(k, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

void split(Dataset& d, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  Rng rng(mix_seed(seed, 0x5917));
  for (int k = 0; k < d.num_classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      if (d.labels[i] == k) members.push_back(i);
    }
    if (members.size() < 2) {
      throw Error(Errc::kInvalidArgument, "class '" + d.class_names[k] + "' needs at least 2 images");
    }
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    const auto n = static_cast<double>(members.size());
    const auto n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(train_fraction * n)), 1,
                                                 members.size() - 1);
    d.train.insert(d.train.end(), members.begin(), members.begin() + static_cast<long>(n_train));
    d.test.insert(d.test.end(), members.begin() + static_cast<long>(n_train), members.end());
  }
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.test.begin(), d.test.end());
}

}  // namespace

Dataset generate_toy_dataset(std::uint64_t seed, int n_per_class, InputShape shape, double train_fraction) {
  if (n_per_class < 2) throw Error(Errc::kInvalidArgument, "n_per_class must be >= 2");
  Dataset d;
  d.num_classes = 3;
  d.class_names = {"circle", "square", "triangle"};
  const Shape2d shapes[] = {Shape2d::kCircle, Shape2d::kSquare, Shape2d::kTriangle};
  // Interleave classes so any prefix of the list stays roughly balanced.
  for (int i = 0; i < n_per_class; ++i) {
    for (int k = 0; k < 3; ++k) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i) * 3 + k));
      d.images.push_back(toy_image(rng, shapes[k], shape));
      d.labels.push_back(k);
    }
  }
  split(d, seed, train_fraction);
  return d;
}

Dataset load_image_folder(const std::filesystem::path& root, InputShape shape, std::uint64_t seed,
                          double train_fraction) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(Errc::kIo, "'" + root.string() + "' is not a directory");
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw Error(Errc::kInvalidArgument, "image folder needs at least 2 class directories");
  Dataset d;
  d.num_classes = static_cast<int>(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    d.class_names.push_back(classes[k].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[k])) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Image img = read_image(f);
      if (img.channels == 1 && shape.channels == 3) {
        Image rgb(3, img.height, img.width);
        for (int c = 0; c < 3; ++c) std::copy(img.data.begin(), img.data.end(), rgb.plane(c).begin());
        img = std::move(rgb);
      }
      if (img.channels != shape.channels) {
        throw Error(Errc::kShapeMismatch, "'" + f.string() + "' has " + std::to_string(img.channels) + " channels");
      }
      d.images.push_back(resize_bilinear(img, shape.height, shape.width));
      d.labels.push_back(static_cast<int>(k));
    }
  }
  split(d, seed, train_fraction);
  return d;
}

std::vector<float> mean_color(const Dataset& data) {
  if (data.images.empty()) return {};
  const int c = data.images.front().channels;
  std::vector<double> sum(c, 0.0);
  std::size_t count = 0;
  const auto& idx = data.train.empty() ? data.test : data.train;
  for (std::size_t i : idx) {
    const Image& img = data.images[i];
    for (int k = 0; k < c; ++k) {
      for (float v : img.plane(k)) sum[k] += v;
    }
    count += img.plane_size();
  }
  std::vector<float> out(c);
  for (int k = 0; k < c; ++k) out[k] = count ? static_cast<float>(sum[k] / static_cast<double>(count)) : 0.5f;
  return out;
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (image.height == height && image.width == width) return image;
  Image out(image.channels, height, width);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, image.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, image.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double top = image.at(c, y0, x0) * (1 - tx) + image.at(c, y0, x1) * tx;
        const double bot = image.at(c, y1, x0) * (1 - tx) + image.at(c, y1, x1) * tx;
        out.at(c, y, x) = static_cast<float>(top * (1 - ty) + bot * ty);
      }
    }
  }
  return out;
}

}  // namespace cose::model
