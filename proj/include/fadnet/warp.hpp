#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fadnet/ops.hpp"
#include "fadnet/parallel.hpp"
#include "fadnet/tensor.hpp"

namespace fadnet {

// Reconstructs the left view: out(x, y) = right sampled bilinearly at
// (x - d(x, y), y), zero outside [0, w-1]. Differentiable in both the image
// and the disparity; at integer sample positions the disparity gradient
// takes the branch of decreasing source coordinate.
inline Tensor warp_right_to_left(const Tensor& right, const Tensor& disparity) {
  if (right.ndim() != 4 || disparity.ndim() != 4) {
    throw ShapeError("warp: expects (b,c,h,w) image and (b,1,h,w) disparity");
  }
  if (disparity.extent(1) != 1 || right.extent(0) != disparity.extent(0) ||
      right.extent(2) != disparity.extent(2) || right.extent(3) != disparity.extent(3)) {
    throw ShapeError("warp: disparity " + shape_str(disparity.shape()) +
                     " does not match image " + shape_str(right.shape()));
  }
  const std::int64_t B = right.extent(0), C = right.extent(1), H = right.extent(2),
                     W = right.extent(3);

  std::vector<double> out(static_cast<std::size_t>(B * C * H * W));
  const double* img = right.values().data();
  const double* disp = disparity.values().data();

  parallel_for(
      B * C * H,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
          const std::int64_t y = r % H;
          const std::int64_t c = (r / H) % C;
          const std::int64_t b = r / (H * C);
          const double* img_row = img + r * W;
          const double* d_row = disp + (b * H + y) * W;
          double* out_row = out.data() + r * W;
          (void)c;
          for (std::int64_t x = 0; x < W; ++x) {
            const double xs = static_cast<double>(x) - d_row[x];
            const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
            const double f = xs - static_cast<double>(x0);
            const double v0 = (x0 >= 0 && x0 < W) ? img_row[x0] : 0.0;
            const double v1 = (x0 + 1 >= 0 && x0 + 1 < W) ? img_row[x0 + 1] : 0.0;
            out_row[x] = (1.0 - f) * v0 + f * v1;
          }
        }
      },
      detail::row_grain(W * 4));

  auto img_node = right.node();
  auto d_node = disparity.node();
  return Tensor::make_op(
      "warp_right_to_left", right.shape(), std::move(out), {right, disparity},
      [img_node, d_node, B, C, H, W](detail::TensorNode& o) {
        const double* gout = o.grad.data();
        const double* img = img_node->data.data();
        const double* disp = d_node->data.data();
        if (img_node->requires_grad) {
          double* gimg = img_node->grad_buffer().data();
          // Scatter stays within one row, so rows parallelize safely.
          parallel_for(
              B * C * H,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t y = r % H;
                  const std::int64_t b = r / (H * C);
                  const double* d_row = disp + (b * H + y) * W;
                  const double* g_row = gout + r * W;
                  double* gi_row = gimg + r * W;
                  for (std::int64_t x = 0; x < W; ++x) {
                    const double xs = static_cast<double>(x) - d_row[x];
                    const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
                    const double f = xs - static_cast<double>(x0);
                    if (x0 >= 0 && x0 < W) gi_row[x0] += (1.0 - f) * g_row[x];
                    if (x0 + 1 >= 0 && x0 + 1 < W) gi_row[x0 + 1] += f * g_row[x];
                  }
                }
              },
              detail::row_grain(W * 4));
        }
        if (d_node->requires_grad) {
          double* gd = d_node->grad_buffer().data();
          parallel_for(
              B * H,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t y = r % H;
                  const std::int64_t b = r / H;
                  const double* d_row = disp + r * W;
                  double* gd_row = gd + r * W;
                  for (std::int64_t x = 0; x < W; ++x) {
                    const double xs = static_cast<double>(x) - d_row[x];
                    const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
                    double acc = 0.0;
                    for (std::int64_t c = 0; c < C; ++c) {
                      const double* img_row = img + ((b * C + c) * H + y) * W;
                      const double v0 = (x0 >= 0 && x0 < W) ? img_row[x0] : 0.0;
                      const double v1 = (x0 + 1 >= 0 && x0 + 1 < W) ? img_row[x0 + 1] : 0.0;
                      acc += gout[((b * C + c) * H + y) * W + x] * (v0 - v1);
                    }
                    gd_row[x] += acc;
                  }
                }
              },
              detail::row_grain(W * C * 4));
        }
      });
}

enum class ResampleMode { down_average, up_bilinear };

// Power-of-two spatial rescale; every output value is also multiplied by
// value_scale so disparities can stay in scale-local pixel units.
inline Tensor resample(const Tensor& input, std::int64_t factor, ResampleMode mode,
                       double value_scale) {
  if (input.ndim() != 4) throw ShapeError("resample: expects (b,c,h,w)");
  if (factor < 1 || (factor & (factor - 1)) != 0) {
    throw ShapeError("resample: factor must be a power of two, got " + std::to_string(factor));
  }
  const std::int64_t B = input.extent(0), C = input.extent(1), H = input.extent(2),
                     W = input.extent(3);
  auto in_node = input.node();

  if (factor == 1) return mul_scalar(input, value_scale);

  if (mode == ResampleMode::down_average) {
    if (H % factor != 0 || W % factor != 0) {
      throw ShapeError("resample: extents " + shape_str(input.shape()) +
                       " not divisible by factor " + std::to_string(factor));
    }
    const std::int64_t OH = H / factor, OW = W / factor;
    const double scale = value_scale / static_cast<double>(factor * factor);
    std::vector<double> out(static_cast<std::size_t>(B * C * OH * OW), 0.0);
    const double* in = input.values().data();
    for (std::int64_t p = 0; p < B * C; ++p) {
      const double* in_plane = in + p * H * W;
      double* out_plane = out.data() + p * OH * OW;
      for (std::int64_t oy = 0; oy < OH; ++oy) {
        for (std::int64_t ox = 0; ox < OW; ++ox) {
          double acc = 0.0;
          for (std::int64_t dy = 0; dy < factor; ++dy) {
            const double* row = in_plane + (oy * factor + dy) * W + ox * factor;
            for (std::int64_t dx = 0; dx < factor; ++dx) acc += row[dx];
          }
          out_plane[oy * OW + ox] = acc * scale;
        }
      }
    }
    return Tensor::make_op("resample_down", {B, C, OH, OW}, std::move(out), {input},
                           [in_node, B, C, OH, OW, W, factor, scale](detail::TensorNode& o) {
                             if (!in_node->requires_grad) return;
                             double* gin = in_node->grad_buffer().data();
                             const double* gout = o.grad.data();
                             for (std::int64_t p = 0; p < B * C; ++p) {
                               const double* g_plane = gout + p * OH * OW;
                               double* gi_plane = gin + p * (OH * factor) * W;
                               for (std::int64_t oy = 0; oy < OH; ++oy) {
                                 for (std::int64_t ox = 0; ox < OW; ++ox) {
                                   const double g = g_plane[oy * OW + ox] * scale;
                                   for (std::int64_t dy = 0; dy < factor; ++dy) {
                                     double* row = gi_plane + (oy * factor + dy) * W + ox * factor;
                                     for (std::int64_t dx = 0; dx < factor; ++dx) row[dx] += g;
                                   }
                                 }
                               }
                             }
                           });
  }

  // Bilinear upsample with edge-clamped taps; constants stay constant.
  const std::int64_t OH = H * factor, OW = W * factor;
  const double inv = 1.0 / static_cast<double>(factor);
  auto src_of = [inv](std::int64_t o) { return (static_cast<double>(o) + 0.5) * inv - 0.5; };
  auto clamp_idx = [](std::int64_t i, std::int64_t n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
  };

  std::vector<double> out(static_cast<std::size_t>(B * C * OH * OW));
  const double* in = input.values().data();
  for (std::int64_t p = 0; p < B * C; ++p) {
    const double* in_plane = in + p * H * W;
    double* out_plane = out.data() + p * OH * OW;
    for (std::int64_t oy = 0; oy < OH; ++oy) {
      const double ys = src_of(oy);
      const std::int64_t y0 = static_cast<std::int64_t>(std::floor(ys));
      const double fy = ys - static_cast<double>(y0);
      const std::int64_t cy0 = clamp_idx(y0, H), cy1 = clamp_idx(y0 + 1, H);
      for (std::int64_t ox = 0; ox < OW; ++ox) {
        const double xs = src_of(ox);
        const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
        const double fx = xs - static_cast<double>(x0);
        const std::int64_t cx0 = clamp_idx(x0, W), cx1 = clamp_idx(x0 + 1, W);
        const double v = (1.0 - fy) * ((1.0 - fx) * in_plane[cy0 * W + cx0] +
                                       fx * in_plane[cy0 * W + cx1]) +
                         fy * ((1.0 - fx) * in_plane[cy1 * W + cx0] +
                               fx * in_plane[cy1 * W + cx1]);
        out_plane[oy * OW + ox] = v * value_scale;
      }
    }
  }
  return Tensor::make_op(
      "resample_up", {B, C, OH, OW}, std::move(out), {input},
      [in_node, B, C, H, W, OH, OW, value_scale, src_of, clamp_idx](detail::TensorNode& o) {
        if (!in_node->requires_grad) return;
        double* gin = in_node->grad_buffer().data();
        const double* gout = o.grad.data();
        for (std::int64_t p = 0; p < B * C; ++p) {
          const double* g_plane = gout + p * OH * OW;
          double* gi_plane = gin + p * H * W;
          for (std::int64_t oy = 0; oy < OH; ++oy) {
            const double ys = src_of(oy);
            const std::int64_t y0 = static_cast<std::int64_t>(std::floor(ys));
            const double fy = ys - static_cast<double>(y0);
            const std::int64_t cy0 = clamp_idx(y0, H), cy1 = clamp_idx(y0 + 1, H);
            for (std::int64_t ox = 0; ox < OW; ++ox) {
              const double xs = src_of(ox);
              const std::int64_t x0 = static_cast<std::int64_t>(std::floor(xs));
              const double fx = xs - static_cast<double>(x0);
              const std::int64_t cx0 = clamp_idx(x0, W), cx1 = clamp_idx(x0 + 1, W);
              const double g = g_plane[oy * OW + ox] * value_scale;
              gi_plane[cy0 * W + cx0] += (1.0 - fy) * (1.0 - fx) * g;
              gi_plane[cy0 * W + cx1] += (1.0 - fy) * fx * g;
              gi_plane[cy1 * W + cx0] += fy * (1.0 - fx) * g;
              gi_plane[cy1 * W + cx1] += fy * fx * g;
            }
          }
        }
      });
}

}  // namespace fadnet
