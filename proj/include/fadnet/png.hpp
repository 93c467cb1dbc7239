#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fadnet/errors.hpp"

// Minimal PNG codec for the payloads this project needs: non-interlaced
// greyscale or RGB images at 8 or 16 bits per sample. The encoder always
// writes filter-type 0 scanlines; the decoder handles all five standard row
// filters, so externally produced files of the supported layouts load too.

namespace fadnet {

struct PngImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  int bit_depth = 16;  // 8 or 16
  int channels = 1;    // 1 = grey, 3 = rgb
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels

  std::int64_t sample_count() const { return width * height * channels; }
  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

namespace detail {

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[5],
                         const std::vector<std::uint8_t>& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc =
      crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

inline std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& in) {
  uLongf bound = compressBound(static_cast<uLong>(in.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()), 6) != Z_OK) {
    throw FormatError("png: deflate failed");
  }
  out.resize(bound);
  return out;
}

inline std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& in,
                                              std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf n = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &n, in.data(), static_cast<uLong>(in.size()));
  if (rc != Z_OK || n != expected) {
    throw FormatError("png: inflate failed (rc " + std::to_string(rc) + ", got " +
                      std::to_string(n) + " of " + std::to_string(expected) + " bytes)");
  }
  return out;
}

inline std::uint8_t paeth(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  const int p = static_cast<int>(a) + static_cast<int>(b) - static_cast<int>(c);
  const int pa = std::abs(p - static_cast<int>(a));
  const int pb = std::abs(p - static_cast<int>(b));
  const int pc = std::abs(p - static_cast<int>(c));
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

}  // namespace detail

inline std::vector<std::uint8_t> png_encode(const PngImage& img) {
  if (img.bit_depth != 8 && img.bit_depth != 16) {
    throw FormatError("png: unsupported bit depth " + std::to_string(img.bit_depth));
  }
  if (img.channels != 1 && img.channels != 3) {
    throw FormatError("png: unsupported channel count " + std::to_string(img.channels));
  }
  if (static_cast<std::int64_t>(img.samples.size()) != img.sample_count()) {
    throw FormatError("png: sample buffer size mismatch");
  }
  static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<std::uint8_t> out(signature, signature + 8);

  std::vector<std::uint8_t> ihdr;
  detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(static_cast<std::uint8_t>(img.bit_depth));
  ihdr.push_back(img.channels == 1 ? 0 : 2);  // colour type
  ihdr.push_back(0);                          // compression
  ihdr.push_back(0);                          // filter method
  ihdr.push_back(0);                          // no interlace
  detail::append_chunk(out, "IHDR", ihdr);

  const std::int64_t bytes_per_sample = img.bit_depth / 8;
  const std::int64_t row_bytes = img.width * img.channels * bytes_per_sample;
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>((row_bytes + 1) * img.height));
  for (std::int64_t y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter type 0
    for (std::int64_t i = 0; i < img.width * img.channels; ++i) {
      const std::uint16_t v = img.samples[static_cast<std::size_t>(y * img.width * img.channels + i)];
      if (img.bit_depth == 16) {
        raw.push_back(static_cast<std::uint8_t>(v >> 8));
        raw.push_back(static_cast<std::uint8_t>(v & 0xff));
      } else {
        raw.push_back(static_cast<std::uint8_t>(v & 0xff));
      }
    }
  }
  detail::append_chunk(out, "IDAT", detail::zlib_deflate(raw));
  detail::append_chunk(out, "IEND", {});
  return out;
}

inline PngImage png_decode(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), signature, 8) != 0) {
    throw FormatError("png: bad signature at byte 0");
  }
  PngImage img;
  std::vector<std::uint8_t> idat;
  bool have_ihdr = false;
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = detail::get_u32_be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) {
      throw FormatError("png: truncated chunk at byte " + std::to_string(pos));
    }
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* data = bytes.data() + pos + 8;
    const uLong crc_want = detail::get_u32_be(bytes.data() + pos + 8 + len);
    const uLong crc_got = crc32(0L, bytes.data() + pos + 4, static_cast<uInt>(4 + len));
    if (crc_want != crc_got) {
      throw FormatError("png: CRC mismatch at byte " + std::to_string(pos));
    }
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw FormatError("png: bad IHDR length at byte " + std::to_string(pos));
      img.width = detail::get_u32_be(data);
      img.height = detail::get_u32_be(data + 4);
      img.bit_depth = data[8];
      const int colour = data[9];
      if (img.bit_depth != 8 && img.bit_depth != 16) {
        throw FormatError("png: unsupported bit depth " + std::to_string(img.bit_depth));
      }
      if (colour != 0 && colour != 2) {
        throw FormatError("png: unsupported colour type " + std::to_string(colour));
      }
      if (data[12] != 0) throw FormatError("png: interlaced images unsupported");
      img.channels = colour == 0 ? 1 : 3;
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || img.width < 1 || img.height < 1) throw FormatError("png: missing IHDR");
  if (idat.empty()) throw FormatError("png: missing IDAT");

  const std::int64_t bpp = img.channels * img.bit_depth / 8;  // bytes per pixel
  const std::int64_t row_bytes = img.width * bpp;
  const std::size_t expected = static_cast<std::size_t>((row_bytes + 1) * img.height);
  std::vector<std::uint8_t> raw = detail::zlib_inflate(idat, expected);

  // Undo per-row filtering in place.
  std::vector<std::uint8_t> prev(static_cast<std::size_t>(row_bytes), 0);
  img.samples.resize(static_cast<std::size_t>(img.sample_count()));
  for (std::int64_t y = 0; y < img.height; ++y) {
    std::uint8_t* row = raw.data() + y * (row_bytes + 1);
    const std::uint8_t filter = row[0];
    std::uint8_t* cur = row + 1;
    for (std::int64_t i = 0; i < row_bytes; ++i) {
      const std::uint8_t a = i >= bpp ? cur[i - bpp] : 0;
      const std::uint8_t b = prev[static_cast<std::size_t>(i)];
      const std::uint8_t c = i >= bpp ? prev[static_cast<std::size_t>(i - bpp)] : 0;
      switch (filter) {
        case 0: break;
        case 1: cur[i] = static_cast<std::uint8_t>(cur[i] + a); break;
        case 2: cur[i] = static_cast<std::uint8_t>(cur[i] + b); break;
        case 3: cur[i] = static_cast<std::uint8_t>(cur[i] + ((a + b) >> 1)); break;
        case 4: cur[i] = static_cast<std::uint8_t>(cur[i] + detail::paeth(a, b, c)); break;
        default:
          throw FormatError("png: unknown filter " + std::to_string(filter) + " in row " +
                            std::to_string(y));
      }
    }
    std::memcpy(prev.data(), cur, static_cast<std::size_t>(row_bytes));
    std::uint16_t* dst = img.samples.data() + y * img.width * img.channels;
    if (img.bit_depth == 16) {
      for (std::int64_t i = 0; i < img.width * img.channels; ++i) {
        dst[i] = static_cast<std::uint16_t>((cur[2 * i] << 8) | cur[2 * i + 1]);
      }
    } else {
      for (std::int64_t i = 0; i < img.width * img.channels; ++i) dst[i] = cur[i];
    }
  }
  return img;
}

}  // namespace fadnet
