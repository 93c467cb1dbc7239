#pragma once

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fadnet/disparity_io.hpp"
#include "fadnet/file_util.hpp"
#include "fadnet/synthetic.hpp"

// On-disk dataset layout: 16-bit RGB PNG image pairs, PFM ground truth, and
// a manifest listing one sample per line as "left right gt" (paths relative
// to the dataset directory).

namespace fadnet {

struct SamplePaths {
  std::string left;
  std::string right;
  std::string gt;
};

inline std::vector<SamplePaths> read_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.txt").string();
  std::istringstream lines(read_text_file(path));
  std::vector<SamplePaths> out;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    SamplePaths p;
    if (!(row >> p.left >> p.right >> p.gt)) {
      throw FormatError("manifest: bad line '" + line + "' in " + path);
    }
    out.push_back(p);
  }
  if (out.empty()) throw FormatError("manifest: no samples listed in " + path);
  return out;
}

inline StereoSample load_sample(const std::string& dir, const SamplePaths& paths) {
  namespace fs = std::filesystem;
  StereoSample s;
  s.left = image_to_tensor(png_decode(read_file((fs::path(dir) / paths.left).string())));
  s.right = image_to_tensor(png_decode(read_file((fs::path(dir) / paths.right).string())));
  DisparityMap gt = pfm_read(read_file((fs::path(dir) / paths.gt).string()));
  s.disparity_gt = gt.to_tensor();
  s.valid_mask = gt.mask_tensor();
  return s;
}

inline std::vector<StereoSample> load_dataset(const std::string& dir) {
  std::vector<StereoSample> out;
  for (const auto& paths : read_manifest(dir)) out.push_back(load_sample(dir, paths));
  return out;
}

// Writes samples and the manifest; file contents are a pure function of the
// samples, so regeneration with the same seed is byte-identical.
inline void write_dataset(const std::string& dir, const std::vector<StereoSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string manifest;
  char name[64];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::snprintf(name, sizeof(name), "sample_%04zu", i);
    const std::string left = std::string(name) + "_left.png";
    const std::string right = std::string(name) + "_right.png";
    const std::string gt = std::string(name) + "_disp.pfm";
    write_file((fs::path(dir) / left).string(), png_encode(tensor_to_image16(s.left)));
    write_file((fs::path(dir) / right).string(), png_encode(tensor_to_image16(s.right)));
    write_file((fs::path(dir) / gt).string(),
               pfm_write(DisparityMap::from_tensor(s.disparity_gt, false, &s.valid_mask)));
    manifest += left + " " + right + " " + gt + "\n";
  }
  write_text_file((fs::path(dir) / "manifest.txt").string(), manifest);
}

}  // namespace fadnet
