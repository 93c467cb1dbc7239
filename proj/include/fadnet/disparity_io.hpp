#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "fadnet/errors.hpp"
#include "fadnet/png.hpp"
#include "fadnet/tensor.hpp"

// Disparity maps and their two on-disk encodings: greyscale PFM (32-bit
// floats, bottom row first, header scale sign giving endianness) and the
// 16-bit PNG convention (stored value = disparity * 256, 0 marking invalid
// pixels). Map values are 32-bit floats so that a PFM round trip is
// bit-exact.

namespace fadnet {

struct DisparityMap {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<float> values;        // row-major, top row first
  std::vector<std::uint8_t> valid;  // 1 = usable pixel

  static DisparityMap sized(std::int64_t w, std::int64_t h) {
    DisparityMap m;
    m.width = w;
    m.height = h;
    m.values.assign(static_cast<std::size_t>(w * h), 0.0f);
    m.valid.assign(static_cast<std::size_t>(w * h), 1);
    return m;
  }

  float at(std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>(y * width + x)];
  }
  bool is_valid(std::int64_t y, std::int64_t x) const {
    return valid[static_cast<std::size_t>(y * width + x)] != 0;
  }

  // Quantises a (1,1,H,W) tensor to the map's 32-bit precision. Clamping at
  // zero is applied on inference outputs, never during training.
  static DisparityMap from_tensor(const Tensor& t, bool clamp_nonneg,
                                  const Tensor* mask = nullptr) {
    if (t.ndim() != 4 || t.extent(0) != 1 || t.extent(1) != 1) {
      throw ShapeError("DisparityMap: expected (1,1,h,w), got " + shape_str(t.shape()));
    }
    DisparityMap m = sized(t.extent(3), t.extent(2));
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      double v = t.values()[i];
      if (clamp_nonneg && v < 0.0) v = 0.0;
      m.values[i] = static_cast<float>(v);
      if (mask) m.valid[i] = mask->values()[i] != 0.0 ? 1 : 0;
    }
    return m;
  }

  Tensor to_tensor() const {
    Tensor t = Tensor::zeros({1, 1, height, width});
    for (std::size_t i = 0; i < values.size(); ++i) {
      t.values()[i] = valid[i] ? static_cast<double>(values[i]) : 0.0;
    }
    return t;
  }

  Tensor mask_tensor() const {
    Tensor t = Tensor::zeros({1, 1, height, width});
    for (std::size_t i = 0; i < valid.size(); ++i) t.values()[i] = valid[i] ? 1.0 : 0.0;
    return t;
  }
};

// --- PFM ------------------------------------------------------------------

inline std::vector<std::uint8_t> pfm_write(const DisparityMap& map) {
  std::string header = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                       "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  static_assert(std::endian::native == std::endian::little);
  for (std::int64_t y = map.height - 1; y >= 0; --y) {  // bottom row first
    for (std::int64_t x = 0; x < map.width; ++x) {
      float v = map.at(y, x);
      if (!map.is_valid(y, x)) v = std::numeric_limits<float>::infinity();
      std::uint8_t b[4];
      std::memcpy(b, &v, 4);
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

namespace detail {

// One whitespace-delimited header token starting at `pos`.
inline std::string pfm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
  if (start == pos) throw FormatError("pfm: truncated header at byte " + std::to_string(start));
  return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos));
}

}  // namespace detail

inline DisparityMap pfm_read(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const std::string magic = detail::pfm_token(bytes, pos);
  if (magic == "PF") {
    throw FormatError("pfm: colour 'PF' unsupported, disparity maps are single channel");
  }
  if (magic != "Pf") throw FormatError("pfm: bad magic at byte 0");

  std::int64_t w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoll(detail::pfm_token(bytes, pos));
    h = std::stoll(detail::pfm_token(bytes, pos));
    const std::size_t scale_at = pos;
    scale = std::stod(detail::pfm_token(bytes, pos));
    if (scale == 0.0) throw FormatError("pfm: zero scale at byte " + std::to_string(scale_at));
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError("pfm: malformed header near byte " + std::to_string(pos));
  }
  if (w < 1 || h < 1) throw FormatError("pfm: bad dimensions near byte " + std::to_string(pos));
  ++pos;  // single whitespace terminator before the payload

  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 4;
  if (bytes.size() - pos < need) {
    throw FormatError("pfm: truncated payload at byte " + std::to_string(bytes.size()) +
                      " (need " + std::to_string(pos + need) + ")");
  }
  const bool big_endian = scale > 0.0;
  DisparityMap map = DisparityMap::sized(w, h);
  std::size_t off = pos;
  for (std::int64_t y = h - 1; y >= 0; --y) {
    for (std::int64_t x = 0; x < w; ++x, off += 4) {
      std::uint8_t b[4];
      std::memcpy(b, bytes.data() + off, 4);
      if (big_endian) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      float v;
      std::memcpy(&v, b, 4);
      const std::size_t i = static_cast<std::size_t>(y * w + x);
      if (std::isfinite(v)) {
        map.values[i] = v;
      } else {
        map.values[i] = 0.0f;
        map.valid[i] = 0;
      }
    }
  }
  return map;
}

// --- 16-bit PNG (stored = disparity * 256, 0 = invalid) --------------------

inline std::vector<std::uint8_t> kitti_png_write(const DisparityMap& map) {
  PngImage img;
  img.width = map.width;
  img.height = map.height;
  img.bit_depth = 16;
  img.channels = 1;
  img.samples.resize(static_cast<std::size_t>(map.width * map.height));
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (!map.valid[i]) {
      img.samples[i] = 0;
      continue;
    }
    const double stored = std::floor(static_cast<double>(map.values[i]) * 256.0 + 0.5);
    img.samples[i] = static_cast<std::uint16_t>(std::min(std::max(stored, 0.0), 65535.0));
  }
  return png_encode(img);
}

inline DisparityMap kitti_png_read(const std::vector<std::uint8_t>& bytes) {
  PngImage img = png_decode(bytes);
  if (img.bit_depth != 16 || img.channels != 1) {
    throw FormatError("disparity png must be 16-bit single channel, got " +
                      std::to_string(img.bit_depth) + "-bit " + std::to_string(img.channels) +
                      "-channel");
  }
  DisparityMap map = DisparityMap::sized(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (img.samples[i] == 0) {
      map.valid[i] = 0;
      map.values[i] = 0.0f;
    } else {
      map.values[i] = static_cast<float>(img.samples[i]) / 256.0f;
    }
  }
  return map;
}

// --- RGB image <-> tensor -------------------------------------------------

// (1,3,H,W) or (1,1,H,W) tensor in [0,1] from an 8/16-bit PNG; grey inputs
// are replicated across channels on request.
inline Tensor image_to_tensor(const PngImage& img, bool replicate_grey = true) {
  const std::int64_t C = img.channels == 3 || !replicate_grey ? img.channels : 3;
  Tensor t = Tensor::zeros({1, C, img.height, img.width});
  const double norm = img.max_value();
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      for (std::int64_t c = 0; c < C; ++c) {
        const std::int64_t src_c = img.channels == 3 ? c : 0;
        t.values()[(c * img.height + y) * img.width + x] =
            img.samples[static_cast<std::size_t>((y * img.width + x) * img.channels + src_c)] /
            norm;
      }
    }
  }
  return t;
}

// 16-bit PNG from a (1,C,H,W) tensor in [0,1]; values are clamped.
inline PngImage tensor_to_image16(const Tensor& t) {
  if (t.ndim() != 4 || t.extent(0) != 1 || (t.extent(1) != 1 && t.extent(1) != 3)) {
    throw ShapeError("tensor_to_image16: expected (1,1|3,h,w), got " + shape_str(t.shape()));
  }
  PngImage img;
  img.width = t.extent(3);
  img.height = t.extent(2);
  img.bit_depth = 16;
  img.channels = static_cast<int>(t.extent(1));
  img.samples.resize(static_cast<std::size_t>(img.sample_count()));
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      for (std::int64_t c = 0; c < img.channels; ++c) {
        double v = t.values()[(c * img.height + y) * img.width + x];
        v = std::min(std::max(v, 0.0), 1.0);
        img.samples[static_cast<std::size_t>((y * img.width + x) * img.channels + c)] =
            static_cast<std::uint16_t>(std::floor(v * 65535.0 + 0.5));
      }
    }
  }
  return img;
}

}  // namespace fadnet
