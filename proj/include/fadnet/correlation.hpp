#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "fadnet/conv.hpp"
#include "fadnet/parallel.hpp"
#include "fadnet/tensor.hpp"

// Horizontal matching-cost layers. Channel j of the output holds the
// correlation between the reference features and the second map shifted j
// pixels along negative x, for j in {0, ..., D-1}; out-of-image samples are
// zero. With kernel half-width k, scores are summed over the (2k+1)^2 patch
// around each centre.

namespace fadnet {

struct CorrelationSpec {
  std::int64_t max_displacement = 1;  // D: output channel count
  std::int64_t kernel = 0;            // patch half-width (0 = point-wise matching)

  std::vector<std::int64_t> displacement_set() const {
    std::vector<std::int64_t> shifts(static_cast<std::size_t>(max_displacement));
    std::iota(shifts.begin(), shifts.end(), 0);
    return shifts;
  }
};

namespace detail {

inline void check_correlation_inputs(const Tensor& f1, const Tensor& f2,
                                     const CorrelationSpec& spec) {
  if (f1.ndim() != 4 || f1.shape() != f2.shape()) {
    throw ShapeError("correlation: feature shapes must match, got " + shape_str(f1.shape()) +
                     " vs " + shape_str(f2.shape()));
  }
  if (spec.max_displacement < 1) throw ShapeError("correlation: max_displacement must be >= 1");
  if (spec.kernel < 0) throw ShapeError("correlation: kernel half-width must be >= 0");
}

}  // namespace detail

inline Tensor correlation_patch(const Tensor& f1, const Tensor& f2, const CorrelationSpec& spec) {
  detail::check_correlation_inputs(f1, f2, spec);
  const std::int64_t B = f1.extent(0), C = f1.extent(1), H = f1.extent(2), W = f1.extent(3);
  const std::int64_t D = spec.max_displacement, K = spec.kernel;

  std::vector<double> out(static_cast<std::size_t>(B * D * H * W), 0.0);
  const double* p1 = f1.values().data();
  const double* p2 = f2.values().data();

  parallel_for(
      B * D * H,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
          const std::int64_t y = r % H;
          const std::int64_t j = (r / H) % D;
          const std::int64_t b = r / (H * D);
          double* out_row = out.data() + r * W;
          for (std::int64_t x = 0; x < W; ++x) {
            double acc = 0.0;
            for (std::int64_t oy = -K; oy <= K; ++oy) {
              const std::int64_t yy = y + oy;
              if (yy < 0 || yy >= H) continue;
              for (std::int64_t ox = -K; ox <= K; ++ox) {
                const std::int64_t x1 = x + ox;
                const std::int64_t x2 = x1 - j;
                if (x1 < 0 || x1 >= W || x2 < 0 || x2 >= W) continue;
                for (std::int64_t c = 0; c < C; ++c) {
                  const double* plane1 = p1 + ((b * C + c) * H + yy) * W;
                  const double* plane2 = p2 + ((b * C + c) * H + yy) * W;
                  acc += plane1[x1] * plane2[x2];
                }
              }
            }
            out_row[x] = acc;
          }
        }
      },
      detail::row_grain(W * C * (2 * K + 1) * (2 * K + 1)));

  auto n1 = f1.node();
  auto n2 = f2.node();
  return Tensor::make_op(
      "correlation_patch", {B, D, H, W}, std::move(out), {f1, f2},
      [n1, n2, B, C, H, W, D, K](detail::TensorNode& o) {
        const double* gout = o.grad.data();
        // Box sum of gout channel j around (y, x); zero outside the image.
        auto box = [&](std::int64_t b, std::int64_t j, std::int64_t y, std::int64_t x) {
          const double* plane = gout + (b * D + j) * H * W;
          double s = 0.0;
          for (std::int64_t oy = -K; oy <= K; ++oy) {
            const std::int64_t yy = y - oy;
            if (yy < 0 || yy >= H) continue;
            for (std::int64_t ox = -K; ox <= K; ++ox) {
              const std::int64_t xx = x - ox;
              if (xx < 0 || xx >= W) continue;
              s += plane[yy * W + xx];
            }
          }
          return s;
        };
        if (n1->requires_grad) {
          double* g1 = n1->grad_buffer().data();
          const double* p2 = n2->data.data();
          parallel_for(
              B * C * H,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t y = r % H;
                  const std::int64_t c = (r / H) % C;
                  const std::int64_t b = r / (H * C);
                  double* g_row = g1 + r * W;
                  const double* f2_row = p2 + ((b * C + c) * H + y) * W;
                  for (std::int64_t x = 0; x < W; ++x) {
                    double acc = 0.0;
                    for (std::int64_t j = 0; j < D; ++j) {
                      const std::int64_t xs = x - j;
                      if (xs < 0) break;
                      acc += f2_row[xs] * box(b, j, y, x);
                    }
                    g_row[x] += acc;
                  }
                }
              },
              detail::row_grain(W * D * (2 * K + 1) * (2 * K + 1)));
        }
        if (n2->requires_grad) {
          double* g2 = n2->grad_buffer().data();
          const double* p1 = n1->data.data();
          parallel_for(
              B * C * H,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t y = r % H;
                  const std::int64_t c = (r / H) % C;
                  const std::int64_t b = r / (H * C);
                  double* g_row = g2 + r * W;
                  const double* f1_row = p1 + ((b * C + c) * H + y) * W;
                  for (std::int64_t x = 0; x < W; ++x) {
                    double acc = 0.0;
                    for (std::int64_t j = 0; j < D; ++j) {
                      const std::int64_t xs = x + j;
                      if (xs >= W) break;
                      acc += f1_row[xs] * box(b, j, y, xs);
                    }
                    g_row[x] += acc;
                  }
                }
              },
              detail::row_grain(W * D * (2 * K + 1) * (2 * K + 1)));
        }
      });
}

// Point-wise correlation: a shared 3x3 stride-1 convolution applied to both
// feature maps, followed by per-pixel matching (kernel half-width 0).
inline Tensor correlation_pointwise(const Tensor& f1, const Tensor& f2,
                                    const CorrelationSpec& spec, const ConvSpec& pre_conv) {
  detail::check_correlation_inputs(f1, f2, spec);
  if (pre_conv.transposed || pre_conv.kernel != 3 || pre_conv.stride != 1 ||
      pre_conv.padding != 1) {
    throw ShapeError("correlation_pointwise: pre-transform must be a 3x3 stride-1 same-size conv");
  }
  if (pre_conv.in_channels != f1.extent(1) || pre_conv.out_channels != pre_conv.in_channels) {
    throw ShapeError("correlation_pointwise: pre-transform must map " +
                     std::to_string(f1.extent(1)) + " channels onto themselves");
  }
  CorrelationSpec pw = spec;
  pw.kernel = 0;
  return correlation_patch(conv2d(f1, pre_conv), conv2d(f2, pre_conv), pw);
}

}  // namespace fadnet
