#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fadnet/errors.hpp"
#include "fadnet/file_util.hpp"
#include "fadnet/tensor.hpp"

// Weight checkpoints: magic "FADW", a u32 format version, then one record
// per parameter: u32 name length, name bytes, u32 shape rank, u32 extents,
// and the raw little-endian 64-bit values. Records run to end of file.

namespace fadnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const std::uint8_t* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

inline std::uint32_t take_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) {
    throw FormatError("checkpoint: truncated at byte " + std::to_string(pos));
  }
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_weights(
    const std::vector<std::pair<std::string, Tensor>>& params) {
  std::vector<std::uint8_t> out{'F', 'A', 'D', 'W'};
  detail::put_u32(out, kCheckpointVersion);
  for (const auto& [name, t] : params) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (auto e : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(e));
    const std::uint8_t* p = reinterpret_cast<const std::uint8_t*>(t.values().data());
    out.insert(out.end(), p, p + t.values().size() * sizeof(double));
  }
  return out;
}

struct WeightRecord {
  Shape shape;
  std::vector<double> data;
};

inline std::map<std::string, WeightRecord> decode_weights(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "FADW", 4) != 0) {
    throw FormatError("checkpoint: bad magic at byte 0");
  }
  std::size_t pos = 4;
  const std::uint32_t version = detail::take_u32(bytes, pos);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::map<std::string, WeightRecord> out;
  while (pos < bytes.size()) {
    const std::uint32_t name_len = detail::take_u32(bytes, pos);
    if (pos + name_len > bytes.size()) {
      throw FormatError("checkpoint: truncated name at byte " + std::to_string(pos));
    }
    std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + name_len));
    pos += name_len;
    const std::uint32_t rank = detail::take_u32(bytes, pos);
    WeightRecord rec;
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint32_t e = detail::take_u32(bytes, pos);
      rec.shape.push_back(static_cast<std::int64_t>(e));
      numel *= e;
    }
    const std::size_t payload = static_cast<std::size_t>(numel) * sizeof(double);
    if (pos + payload > bytes.size()) {
      throw FormatError("checkpoint: truncated payload for '" + name + "' at byte " +
                        std::to_string(pos));
    }
    rec.data.resize(static_cast<std::size_t>(numel));
    std::memcpy(rec.data.data(), bytes.data() + pos, payload);
    pos += payload;
    if (!out.emplace(std::move(name), std::move(rec)).second) {
      throw FormatError("checkpoint: duplicate parameter record");
    }
  }
  return out;
}

inline void save_weights(const std::string& path,
                         const std::vector<std::pair<std::string, Tensor>>& params) {
  write_file(path, encode_weights(params));
}

// Copies stored values into the given parameters; every name must resolve
// and every shape must match, and no stored record may be left over.
inline void load_weights_from(const std::map<std::string, WeightRecord>& records,
                              const std::vector<std::pair<std::string, Tensor>>& params) {
  if (records.size() != params.size()) {
    throw FormatError("checkpoint: holds " + std::to_string(records.size()) +
                      " records, model has " + std::to_string(params.size()) + " parameters");
  }
  for (const auto& [name, t] : params) {
    auto it = records.find(name);
    if (it == records.end()) throw FormatError("checkpoint: missing parameter '" + name + "'");
    if (it->second.shape != t.shape()) {
      throw FormatError("checkpoint: shape mismatch for '" + name + "': stored " +
                        shape_str(it->second.shape) + " vs model " + shape_str(t.shape()));
    }
    Tensor target = t;
    target.values() = it->second.data;
  }
}

inline void load_weights(const std::string& path,
                         const std::vector<std::pair<std::string, Tensor>>& params) {
  load_weights_from(decode_weights(read_file(path)), params);
}

}  // namespace fadnet
