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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fed {

/// Axis-aligned pixel rectangle.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// 8-bit interleaved RGB raster. Pixel math across the toolkit uses the 0-255 scale.
struct Image {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * kChannels;
  }
  std::uint8_t& at(int x, int y, int c) { return pixels[offset(x, y) + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[offset(x, y) + c]; }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Codecs. Decoders sniff the magic bytes: binary PPM/PGM (P6/P5) and PNG.
std::string encode_ppm(const Image& image);
std::string encode_png(const Image& image);
Image decode_image(std::string_view bytes);

/// Reads an image file. Throws MissingFile / MalformedRecord.
Image read_image(const std::string& path);
/// Writes `.png` as PNG and anything else as binary PPM.
void write_image(const Image& image, const std::string& path);

/// Canonical content digest: SHA-256 of the PPM encoding.
std::string image_hash(const Image& image);

Image crop(const Image& image, const BBox& box);
/// Box-filter downscale so that the longer side is at most `max_side`.
Image downscale(const Image& image, int max_side);

}  // namespace fed
