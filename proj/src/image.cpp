// Copyright 2026 The FED Toolkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fed/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <memory>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed {

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * kChannels, fill) {}

std::string encode_ppm(const Image& image) {
  std::string out = fmt::format("P6\n{} {}\n255\n", image.width, image.height);
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

namespace {

// Parses the ASCII header of a binary netpbm file; returns the payload offset.
std::size_t parse_pnm_header(std::string_view bytes, int& width, int& height, int& maxval) {
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 24)) throw Error(ErrorCode::MalformedRecord, "netpbm dimension too large");
      ++pos;
    }
    if (pos == start) throw Error(ErrorCode::MalformedRecord, "truncated netpbm header");
    return static_cast<int>(value);
  };
  width = next_int();
  height = next_int();
  maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::MalformedRecord, "truncated netpbm header");
  }
  return pos + 1;
}

Image decode_pnm(std::string_view bytes) {
  const bool gray = bytes[1] == '5';
  int width = 0, height = 0, maxval = 0;
  const std::size_t start = parse_pnm_header(bytes, width, height, maxval);
  if (width < 1 || height < 1) throw Error(ErrorCode::MalformedRecord, "empty netpbm image");
  if (maxval != 255) throw Error(ErrorCode::MalformedRecord, "only 8-bit netpbm images are supported");
  const std::size_t channels = gray ? 1 : 3;
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - start < need) throw Error(ErrorCode::MalformedRecord, "truncated netpbm payload");
  Image image(width, height);
  if (gray) {
    for (std::size_t i = 0; i < need; ++i) {
      const auto v = static_cast<std::uint8_t>(bytes[start + i]);
      image.pixels[i * 3] = image.pixels[i * 3 + 1] = image.pixels[i * 3 + 2] = v;
    }
  } else {
    std::memcpy(image.pixels.data(), bytes.data() + start, need);
  }
  return image;
}

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

Image decode_png(std::string_view bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("png: {}", png.message));
  }
  png.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("png: {}", png.message));
  }
  return image;
}

}  // namespace

std::string encode_png(const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  PngImageGuard guard{&png};
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::WriteFailure, fmt::format("png: {}", png.message));
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::WriteFailure, fmt::format("png: {}", png.message));
  }
  out.resize(size);
  return out;
}

Image decode_image(std::string_view bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5')) {
    return decode_pnm(bytes);
  }
  static constexpr unsigned char kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngMagic, 4) == 0) {
    return decode_png(bytes);
  }
  throw Error(ErrorCode::MalformedRecord, "unsupported image format (expected PPM/PGM or PNG)");
}

Image read_image(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path, e.what()));
  }
}

void write_image(const Image& image, const std::string& path) {
  const bool png = std::filesystem::path(path).extension() == ".png";
  write_file_atomic(path, png ? encode_png(image) : encode_ppm(image));
}

std::string image_hash(const Image& image) { return sha256_hex(encode_ppm(image)); }

Image crop(const Image& image, const BBox& box) {
  if (box.x < 0 || box.y < 0 || box.w < 1 || box.h < 1 || box.x + box.w > image.width ||
      box.y + box.h > image.height) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("crop ({},{},{},{}) outside {}x{} image", box.x, box.y, box.w, box.h,
                            image.width, image.height));
  }
  Image out(box.w, box.h);
  const std::size_t row = static_cast<std::size_t>(box.w) * Image::kChannels;
  for (int y = 0; y < box.h; ++y) {
    std::memcpy(&out.pixels[out.offset(0, y)], &image.pixels[image.offset(box.x, box.y + y)], row);
  }
  return out;
}

Image downscale(const Image& image, int max_side) {
  const int longest = std::max(image.width, image.height);
  if (longest <= max_side) return image;
  const double scale = static_cast<double>(longest) / max_side;
  const int w = std::max(1, static_cast<int>(image.width / scale));
  const int h = std::max(1, static_cast<int>(image.height / scale));
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = y * image.height / h;
    const int y1 = std::max(y0 + 1, (y + 1) * image.height / h);
    for (int x = 0; x < w; ++x) {
      const int x0 = x * image.width / w;
      const int x1 = std::max(x0 + 1, (x + 1) * image.width / w);
      for (int c = 0; c < Image::kChannels; ++c) {
        unsigned long sum = 0;
        for (int yy = y0; yy < y1; ++yy)
          for (int xx = x0; xx < x1; ++xx) sum += image.at(xx, yy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(sum / static_cast<unsigned long>((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

}  // namespace fed
