#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fadnet/errors.hpp"
#include "fadnet/file_util.hpp"
#include "fadnet/network.hpp"

// Flat key/value network configuration files:
//
//   # comment
//   e_ratio = 2
//   d_ratio = 1
//   search_range = 8
//   base_channels = 4,8,16,32,64,64,64
//   seed = 7
//
// Optional keys: decoder_channels (defaults to the mirror of base_channels),
// encoder_stages (defaults to the base_channels length), scales (default 7).

namespace fadnet {

struct RunConfig {
  NetworkConfig net;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::int64_t> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<std::int64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw ConfigError("config: bad integer '" + item + "' in " + key);
    }
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

inline std::int64_t parse_int(const std::string& value, const std::string& key) {
  try {
    return std::stoll(trim(value));
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer '" + value + "' for " + key);
  }
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig run;
  bool saw_base = false, saw_decoder = false, saw_stages = false;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "e_ratio") {
      run.net.e_ratio = detail::parse_int(value, key);
    } else if (key == "d_ratio") {
      run.net.d_ratio = detail::parse_int(value, key);
    } else if (key == "search_range") {
      run.net.search_range = detail::parse_int(value, key);
    } else if (key == "base_channels") {
      run.net.encoder_base = detail::parse_int_list(value, key);
      saw_base = true;
    } else if (key == "decoder_channels") {
      run.net.decoder_base = detail::parse_int_list(value, key);
      saw_decoder = true;
    } else if (key == "encoder_stages") {
      run.net.encoder_stages = detail::parse_int(value, key);
      saw_stages = true;
    } else if (key == "scales") {
      run.net.scales = detail::parse_int(value, key);
    } else if (key == "seed") {
      run.seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
    } else {
      throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
  }
  if (saw_base && !saw_stages) {
    run.net.encoder_stages = static_cast<std::int64_t>(run.net.encoder_base.size());
  }
  if (!saw_decoder) {
    run.net.decoder_base = NetworkConfig::mirror_decoder(run.net.encoder_base, run.net.scales);
  }
  run.net.validate();
  return run;
}

inline RunConfig load_config(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

inline std::string config_to_text(const RunConfig& run) {
  std::ostringstream os;
  auto list = [](const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(v[i]);
    }
    return s;
  };
  os << "e_ratio = " << run.net.e_ratio << '\n';
  os << "d_ratio = " << run.net.d_ratio << '\n';
  os << "search_range = " << run.net.search_range << '\n';
  os << "base_channels = " << list(run.net.encoder_base) << '\n';
  os << "decoder_channels = " << list(run.net.decoder_base) << '\n';
  os << "encoder_stages = " << run.net.encoder_stages << '\n';
  os << "scales = " << run.net.scales << '\n';
  os << "seed = " << run.seed << '\n';
  return os.str();
}

}  // namespace fadnet
