// Copyright 2026 The INoD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// RGB images plus the file formats the pipeline reads and writes:
// binary PGM (P5, 8- or 16-bit) for masks and label grids, PPM (P6) and PNG
// for photographic inputs and overlays.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "inod/errors.hpp"
#include "inod/tensor.hpp"

namespace inod {

// Planar RGB image, values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;  // 3 x height x width

  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f)
      : height(h), width(w), data(kChannels * h * w, fill) {}

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  std::size_t plane() const { return height * width; }

  friend bool operator==(const Image&, const Image&) = default;
};

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
}

// ---- PNM -------------------------------------------------------------------

struct PnmHeader {
  char kind = '5';  // '5' = P5 graymap, '6' = P6 pixmap
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 255;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

// Parses "P5/P6 <w> <h> <maxval>" with '#' comments; returns the offset of
// the raster.
inline std::size_t parse_pnm_header(const std::string& bytes, PnmHeader& hdr) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file (expected P5 or P6 magic)");
  }
  hdr.kind = bytes[1];
  std::size_t pos = 2;
  std::size_t fields[3] = {0, 0, 0};
  for (auto& field : fields) {
    for (;;) {
      if (pos >= bytes.size()) throw FormatError("truncated PNM header");
      const auto c = static_cast<unsigned char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(c)) {
        ++pos;
      } else {
        break;
      }
    }
    if (!std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError("malformed PNM header field");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 24)) throw FormatError("PNM header value out of range");
      ++pos;
    }
    field = v;
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("PNM header must end with a single whitespace byte");
  }
  ++pos;
  hdr.width = fields[0];
  hdr.height = fields[1];
  hdr.maxval = fields[2];
  if (hdr.width == 0 || hdr.height == 0) throw FormatError("PNM image has a zero dimension");
  if (hdr.maxval == 0 || hdr.maxval > 65535) throw FormatError("PNM maxval out of range");
  const std::size_t bps = hdr.maxval > 255 ? 2 : 1;
  const std::size_t channels = hdr.kind == '6' ? 3 : 1;
  if (bytes.size() - pos < hdr.width * hdr.height * channels * bps) {
    throw FormatError("PNM raster is truncated");
  }
  return pos;
}

inline std::string pnm_header(char kind, std::size_t w, std::size_t h, std::size_t maxval) {
  std::ostringstream os;
  os << 'P' << kind << '\n' << w << ' ' << h << '\n' << maxval << '\n';
  return os.str();
}

}  // namespace detail

// Raw samples of a P5 file, row-major; 16-bit samples are big-endian on disk.
inline Grid<std::uint16_t> read_pgm(const std::filesystem::path& path, PnmHeader* header = nullptr) {
  const std::string bytes = detail::read_file(path);
  PnmHeader hdr;
  std::size_t pos = detail::parse_pnm_header(bytes, hdr);
  if (hdr.kind != '5') throw FormatError(path.string() + " is not a P5 graymap");
  Grid<std::uint16_t> out(hdr.height, hdr.width);
  for (auto& v : out.data()) {
    if (hdr.maxval > 255) {
      v = static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[pos]) << 8) |
                                     static_cast<unsigned char>(bytes[pos + 1]));
      pos += 2;
    } else {
      v = static_cast<unsigned char>(bytes[pos++]);
    }
    if (v > hdr.maxval) throw FormatError("PGM sample exceeds maxval in " + path.string());
  }
  if (header) *header = hdr;
  return out;
}

// Mask files hold 0 (source) and 255 (noise); any sample other than 0 or
// maxval is rejected.
inline BinaryGrid read_mask_pgm(const std::filesystem::path& path) {
  PnmHeader hdr;
  const auto raw = read_pgm(path, &hdr);
  BinaryGrid out(raw.height(), raw.width());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = raw.data()[i];
    if (v != 0 && v != hdr.maxval) {
      throw FormatError(path.string() + " is not binary: sample value " + std::to_string(v));
    }
    out.data()[i] = v ? 1 : 0;
  }
  return out;
}

inline std::string encode_mask_pgm(const BinaryGrid& mask) {
  std::string bytes = detail::pnm_header('5', mask.width(), mask.height(), 255);
  for (auto v : mask.data()) bytes.push_back(static_cast<char>(v ? 255 : 0));
  return bytes;
}

inline void write_mask_pgm(const std::filesystem::path& path, const BinaryGrid& mask) {
  detail::write_file(path, encode_mask_pgm(mask));
}

// 16-bit P5 (maxval 65535) for instance id grids.
inline void write_pgm16(const std::filesystem::path& path, const Grid<std::uint32_t>& ids) {
  std::string bytes = detail::pnm_header('5', ids.width(), ids.height(), 65535);
  for (auto v : ids.data()) {
    if (v > 65535) throw ArgumentError("instance id exceeds 16 bits");
    bytes.push_back(static_cast<char>((v >> 8) & 0xff));
    bytes.push_back(static_cast<char>(v & 0xff));
  }
  detail::write_file(path, bytes);
}

// ---- photographic images ---------------------------------------------------

inline Image read_pnm_image(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  PnmHeader hdr;
  std::size_t pos = detail::parse_pnm_header(bytes, hdr);
  Image img(hdr.height, hdr.width);
  const std::size_t channels = hdr.kind == '6' ? 3 : 1;
  const float scale = 1.0f / static_cast<float>(hdr.maxval);
  for (std::size_t y = 0; y < hdr.height; ++y) {
    for (std::size_t x = 0; x < hdr.width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t v;
        if (hdr.maxval > 255) {
          v = (static_cast<unsigned char>(bytes[pos]) << 8) |
              static_cast<unsigned char>(bytes[pos + 1]);
          pos += 2;
        } else {
          v = static_cast<unsigned char>(bytes[pos++]);
        }
        const float f = std::min(1.0f, static_cast<float>(v) * scale);
        if (channels == 3) {
          img.at(c, y, x) = f;
        } else {
          img.at(0, y, x) = img.at(1, y, x) = img.at(2, y, x) = f;
        }
      }
    }
  }
  return img;
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::string bytes = detail::pnm_header('6', img.width, img.height, 255);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) bytes.push_back(static_cast<char>(to_byte(img.at(c, y, x))));
  detail::write_file(path, bytes);
}

inline Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  Image img(png.height, png.width);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(buf[(y * img.width + x) * 3 + c]) / 255.0f;
  return img;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(img.width * img.height * 3);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) buf[(y * img.width + x) * 3 + c] = to_byte(img.at(c, y, x));
  if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

// Reads PNG, PPM or PGM by extension.
inline Image read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return read_png(path);
  return read_pnm_image(path);
}

// Image files of a directory in lexicographic order.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw DataError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace inod
