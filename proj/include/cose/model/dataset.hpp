// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cose/image.hpp"
#include "cose/model/classifier.hpp"

namespace cose::model {

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::size_t> train;  // indices into images
  std::vector<std::size_t> test;
  int num_classes = 0;
  std::vector<std::string> class_names;
};

/// Circles, squares and triangles at random positions, scales and colours
/// over smooth noise backgrounds. Deterministic in `seed`.
Dataset generate_toy_dataset(std::uint64_t seed, int n_per_class, InputShape shape = {},
                             double train_fraction = 0.8);

/// One sub-directory per class (sorted by name), PNG or binary PPM files
/// inside, resized bilinearly to `shape`. Split per class like the toy set.
Dataset load_image_folder(const std::filesystem::path& root, InputShape shape, std::uint64_t seed,
                          double train_fraction = 0.8);

/// Per-channel mean over the training split; used as the out-of-frame fill.
std::vector<float> mean_color(const Dataset& data);

Image read_image(const std::filesystem::path& path);
void write_ppm(const Image& image, const std::filesystem::path& path);
Image resize_bilinear(const Image& image, int height, int width);

}  // namespace cose::model
