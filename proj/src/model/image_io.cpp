// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "cose/error.hpp"
#include "cose/model/dataset.hpp"

namespace cose::model {

namespace {

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(Errc::kIo, "'" + path.string() + "': " + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(Errc::kIo, "'" + path.string() + "': " + msg);
  }
  const int c = gray ? 1 : 3;
  Image img(c, static_cast<int>(png.height), static_cast<int>(png.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int k = 0; k < c; ++k) {
        img.at(k, y, x) = buf[(static_cast<std::size_t>(y) * img.width + x) * c + k] / 255.0f;
      }
    }
  }
  return img;
}

// Binary PGM (P5) / PPM (P6) with maxval <= 255.
Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw Error(Errc::kIo, "'" + path.string() + "': not a binary PGM/PPM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(Errc::kIo, "'" + path.string() + "': malformed header");
  }
  ++pos;  // single whitespace before the raster
  const int c = magic == "P6" ? 3 : 1;
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255 ||
      bytes.size() < pos + static_cast<std::size_t>(w) * h * c) {
    throw Error(Errc::kIo, "'" + path.string() + "': unsupported or truncated raster");
  }
  Image img(c, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        const auto v = static_cast<unsigned char>(bytes[pos + (static_cast<std::size_t>(y) * w + x) * c + k]);
        img.at(k, y, x) = static_cast<float>(v) / static_cast<float>(maxval);
      }
    }
  }
  return img;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  return read_pnm(path);
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) throw Error(Errc::kInvalidArgument, "PPM needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for writing");
  out << (image.channels == 3 ? "P6\n" : "P5\n") << image.width << ' ' << image.height << "\n255\n";
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int k = 0; k < image.channels; ++k) {
        const float v = std::clamp(image.at(k, y, x), 0.0f, 1.0f);
        out.put(static_cast<char>(static_cast<int>(v * 255.0f + 0.5f)));
      }
    }
  }
  if (!out) throw Error(Errc::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace cose::model
