#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fadnet/rng.hpp"
#include "fadnet/tensor.hpp"

// Synthetic rectified stereo pairs with exact ground truth. A textured right
// image is generated first; the left view is produced by sampling it at
// x - d(x, y), so warp consistency holds by construction (exactly for
// integer disparities, to bilinear interpolation otherwise). The disparity
// field is a textured background plane plus piecewise-constant foreground
// regions; pixels whose source sample leaves the image, or is shadowed by a
// nearer region in the same row, are marked invalid.

namespace fadnet {

enum class SceneMode { dots, boxes };

struct StereoSample {
  Tensor left;          // (1,3,H,W) in [0,1]
  Tensor right;         // (1,3,H,W) in [0,1]
  Tensor disparity_gt;  // (1,1,H,W), pixels, >= 0 where valid
  Tensor valid_mask;    // (1,1,H,W), 0/1
};

inline StereoSample generate_synthetic_pair(std::uint64_t seed, std::int64_t H, std::int64_t W,
                                            double max_disparity, SceneMode mode,
                                            bool integer_disparities = false) {
  if (H < 4 || W < 4) throw ShapeError("generate_synthetic_pair: image too small");
  if (!(max_disparity >= 0.0) || max_disparity >= static_cast<double>(W) / 4.0) {
    throw ContractError("generate_synthetic_pair: max_disparity must satisfy 0 <= d < W/4");
  }
  Rng rng(seed);

  // Right image: multi-octave value noise, so texture survives the
  // downsampling stages that feed the matching features.
  Tensor right = Tensor::zeros({1, 3, H, W});
  {
    for (std::int64_t c = 0; c < 3; ++c) {
      double weight = 0.55;
      for (std::int64_t cell = 16; cell >= 1; cell /= 2, weight *= 0.55) {
        const std::int64_t gw = W / cell + 2, gh = H / cell + 2;
        std::vector<double> grid(static_cast<std::size_t>(gw * gh));
        for (auto& v : grid) v = rng.uniform(-1.0, 1.0);
        for (std::int64_t y = 0; y < H; ++y) {
          const double gy = static_cast<double>(y) / static_cast<double>(cell);
          const std::int64_t y0 = static_cast<std::int64_t>(gy);
          const double fy = gy - static_cast<double>(y0);
          for (std::int64_t x = 0; x < W; ++x) {
            const double gx = static_cast<double>(x) / static_cast<double>(cell);
            const std::int64_t x0 = static_cast<std::int64_t>(gx);
            const double fx = gx - static_cast<double>(x0);
            const double v =
                (1.0 - fy) * ((1.0 - fx) * grid[static_cast<std::size_t>(y0 * gw + x0)] +
                              fx * grid[static_cast<std::size_t>(y0 * gw + x0 + 1)]) +
                fy * ((1.0 - fx) * grid[static_cast<std::size_t>((y0 + 1) * gw + x0)] +
                      fx * grid[static_cast<std::size_t>((y0 + 1) * gw + x0 + 1)]);
            right.values()[(c * H + y) * W + x] += weight * v;
          }
        }
      }
    }
    for (auto& v : right.values()) v = std::min(1.0, std::max(0.0, 0.5 + 0.5 * v));
  }

  // Disparity field: background plane plus foreground regions sorted by
  // disparity so nearer regions overwrite farther ones. One region carries
  // exactly max_disparity, so the histogram spans the full range.
  Tensor disp = Tensor::zeros({1, 1, H, W});
  const double bg = rng.uniform(0.0, std::min(1.0, max_disparity));
  for (auto& v : disp.values()) v = bg;

  struct Region {
    std::int64_t x0, y0, w, h;
    double d;
  };
  std::vector<Region> regions;
  const std::int64_t count = mode == SceneMode::boxes ? 4 + rng.index(4) : 16 + rng.index(8);
  for (std::int64_t i = 0; i < count; ++i) {
    Region reg;
    if (mode == SceneMode::boxes) {
      reg.w = W / 8 + rng.index(std::max<std::int64_t>(W / 4, 1));
      reg.h = H / 8 + rng.index(std::max<std::int64_t>(H / 4, 1));
    } else {
      reg.w = 2 + rng.index(3);
      reg.h = reg.w;
    }
    reg.x0 = rng.index(std::max<std::int64_t>(W - reg.w, 1));
    reg.y0 = rng.index(std::max<std::int64_t>(H - reg.h, 1));
    reg.d = i == count - 1 ? max_disparity : rng.uniform(0.25 * max_disparity, max_disparity);
    regions.push_back(reg);
  }
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.d < b.d; });
  for (const auto& reg : regions) {
    const double d = integer_disparities ? std::floor(reg.d + 0.5) : reg.d;
    for (std::int64_t y = reg.y0; y < reg.y0 + reg.h && y < H; ++y) {
      for (std::int64_t x = reg.x0; x < reg.x0 + reg.w && x < W; ++x) {
        disp.values()[y * W + x] = d;
      }
    }
  }
  if (integer_disparities) {
    for (auto& v : disp.values()) v = std::floor(v + 0.5);
  }

  // Left view by sampling the right image; zero outside.
  Tensor left = Tensor::zeros({1, 3, H, W});
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < H; ++y) {
      for (std::int64_t x = 0; x < W; ++x) {
        const double xs = static_cast<double>(x) - disp.values()[y * W + x];
        const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
        const double f = xs - static_cast<double>(x0);
        double v = 0.0;
        if (x0 >= 0 && x0 < W) v += (1.0 - f) * right.values()[(c * H + y) * W + x0];
        if (x0 + 1 >= 0 && x0 + 1 < W) v += f * right.values()[(c * H + y) * W + x0 + 1];
        left.values()[(c * H + y) * W + x] = v;
      }
    }
  }

  // Validity: the source sample must stay inside the image and must not be
  // shadowed by a nearer surface mapping to (almost) the same right pixel.
  Tensor mask = Tensor::zeros({1, 1, H, W});
  for (std::int64_t y = 0; y < H; ++y) {
    for (std::int64_t x = 0; x < W; ++x) {
      const double d = disp.values()[y * W + x];
      const double xs = static_cast<double>(x) - d;
      bool ok = xs >= 0.0 && xs <= static_cast<double>(W - 1);
      if (ok) {
        for (std::int64_t xo = 0; xo < W && ok; ++xo) {
          const double od = disp.values()[y * W + xo];
          if (od > d + 0.5 && std::fabs((static_cast<double>(xo) - od) - xs) < 1.0) ok = false;
        }
      }
      mask.values()[y * W + x] = ok ? 1.0 : 0.0;
    }
  }

  StereoSample sample;
  sample.left = left;
  sample.right = right;
  sample.disparity_gt = disp;
  sample.valid_mask = mask;
  return sample;
}

// Deterministic dataset: sample i uses seed base_seed + i.
inline std::vector<StereoSample> generate_synthetic_dataset(std::uint64_t base_seed,
                                                            std::int64_t count, std::int64_t H,
                                                            std::int64_t W, double max_disparity,
                                                            SceneMode mode,
                                                            bool integer_disparities = false) {
  std::vector<StereoSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    out.push_back(generate_synthetic_pair(base_seed + static_cast<std::uint64_t>(i), H, W,
                                          max_disparity, mode, integer_disparities));
  }
  return out;
}

}  // namespace fadnet
