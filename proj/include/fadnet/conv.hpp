#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fadnet/parallel.hpp"
#include "fadnet/rng.hpp"
#include "fadnet/tensor.hpp"

// 2D convolution and transposed convolution over NCHW tensors, plus the
// leaky rectifier used after every non-head layer. All kernels are gather
// loops: each output (or gradient) element is produced by exactly one
// worker, so values never depend on the worker count.

namespace fadnet {

struct ConvSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  std::int64_t padding = 1;
  bool transposed = false;
  Tensor weight;  // (out,in,k,k), or (in,out,k,k) when transposed
  Tensor bias;    // (out)
};

// Weights zero-mean gaussian at the He scale sqrt(2/fan_in) (the rectifier
// gain keeps activation variance stable through depth), biases zero.
inline ConvSpec make_conv(std::int64_t in_ch, std::int64_t out_ch, std::int64_t kernel,
                          std::int64_t stride, std::int64_t padding, bool transposed, Rng& rng) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1 || padding < 0) {
    throw ShapeError("make_conv: bad geometry in=" + std::to_string(in_ch) +
                     " out=" + std::to_string(out_ch) + " k=" + std::to_string(kernel) +
                     " s=" + std::to_string(stride) + " p=" + std::to_string(padding));
  }
  ConvSpec spec;
  spec.in_channels = in_ch;
  spec.out_channels = out_ch;
  spec.kernel = kernel;
  spec.stride = stride;
  spec.padding = padding;
  spec.transposed = transposed;
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * kernel * kernel));
  Shape wshape = transposed ? Shape{in_ch, out_ch, kernel, kernel}
                            : Shape{out_ch, in_ch, kernel, kernel};
  spec.weight = Tensor::randn(std::move(wshape), rng, stddev, true);
  spec.bias = Tensor::zeros({out_ch}, true);
  return spec;
}

namespace detail {

inline void check_conv_input(const Tensor& input, const ConvSpec& spec, const char* op) {
  if (input.ndim() != 4) {
    throw ShapeError(std::string(op) + ": input must be (b,c,h,w), got " +
                     shape_str(input.shape()));
  }
  if (input.extent(1) != spec.in_channels) {
    throw ShapeError(std::string(op) + ": input has " + std::to_string(input.extent(1)) +
                     " channels, spec expects " + std::to_string(spec.in_channels));
  }
}

}  // namespace detail

inline Tensor conv2d(const Tensor& input, const ConvSpec& spec) {
  detail::check_conv_input(input, spec, "conv2d");
  if (spec.transposed) throw ShapeError("conv2d: spec is transposed; use transposed_conv2d");
  const std::int64_t B = input.extent(0), IC = input.extent(1), H = input.extent(2),
                     W = input.extent(3);
  const std::int64_t OC = spec.out_channels, K = spec.kernel, S = spec.stride, P = spec.padding;
  const std::int64_t OH = (H + 2 * P - K) / S + 1;
  const std::int64_t OW = (W + 2 * P - K) / S + 1;
  if (H + 2 * P < K || W + 2 * P < K || OH < 1 || OW < 1) {
    throw ShapeError("conv2d: kernel " + std::to_string(K) + " exceeds padded input " +
                     shape_str(input.shape()));
  }

  std::vector<double> out(static_cast<std::size_t>(B * OC * OH * OW));
  const double* in = input.values().data();
  const double* w = spec.weight.values().data();
  const double* bias = spec.bias.values().data();

  const std::int64_t rows = B * OC * OH;
  parallel_for(
      rows,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
          const std::int64_t oy = r % OH;
          const std::int64_t oc = (r / OH) % OC;
          const std::int64_t b = r / (OH * OC);
          double* out_row = out.data() + r * OW;
          for (std::int64_t ox = 0; ox < OW; ++ox) out_row[ox] = bias[oc];
          for (std::int64_t ic = 0; ic < IC; ++ic) {
            for (std::int64_t ky = 0; ky < K; ++ky) {
              const std::int64_t iy = oy * S + ky - P;
              if (iy < 0 || iy >= H) continue;
              const double* in_row = in + ((b * IC + ic) * H + iy) * W;
              const double* w_row = w + ((oc * IC + ic) * K + ky) * K;
              for (std::int64_t ox = 0; ox < OW; ++ox) {
                const std::int64_t base = ox * S - P;
                const std::int64_t kx0 = std::max<std::int64_t>(0, -base);
                const std::int64_t kx1 = std::min<std::int64_t>(K, W - base);
                double acc = 0.0;
                for (std::int64_t kx = kx0; kx < kx1; ++kx) acc += w_row[kx] * in_row[base + kx];
                out_row[ox] += acc;
              }
            }
          }
        }
      },
      detail::row_grain(OW * IC * K * K));

  auto in_node = input.node();
  auto w_node = spec.weight.node();
  auto b_node = spec.bias.node();
  return Tensor::make_op(
      "conv2d", {B, OC, OH, OW}, std::move(out), {input, spec.weight, spec.bias},
      [in_node, w_node, b_node, B, IC, OC, H, W, OH, OW, K, S, P](detail::TensorNode& o) {
        const double* gout = o.grad.data();
        const double* in = in_node->data.data();
        const double* w = w_node->data.data();
        if (in_node->requires_grad) {
          double* gin = in_node->grad_buffer().data();
          const std::int64_t rows = B * IC * H;
          parallel_for(
              rows,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t iy = r % H;
                  const std::int64_t ic = (r / H) % IC;
                  const std::int64_t b = r / (H * IC);
                  double* gin_row = gin + r * W;
                  for (std::int64_t oc = 0; oc < OC; ++oc) {
                    for (std::int64_t ky = 0; ky < K; ++ky) {
                      const std::int64_t oy_num = iy + P - ky;
                      if (oy_num < 0 || oy_num % S != 0) continue;
                      const std::int64_t oy = oy_num / S;
                      if (oy >= OH) continue;
                      const double* g_row = gout + ((b * OC + oc) * OH + oy) * OW;
                      const double* w_row = w + ((oc * IC + ic) * K + ky) * K;
                      for (std::int64_t ix = 0; ix < W; ++ix) {
                        double acc = 0.0;
                        for (std::int64_t kx = 0; kx < K; ++kx) {
                          const std::int64_t ox_num = ix + P - kx;
                          if (ox_num < 0 || ox_num % S != 0) continue;
                          const std::int64_t ox = ox_num / S;
                          if (ox >= OW) continue;
                          acc += g_row[ox] * w_row[kx];
                        }
                        gin_row[ix] += acc;
                      }
                    }
                  }
                }
              },
              detail::row_grain(W * OC * K * K));
        }
        if (w_node->requires_grad) {
          double* gw = w_node->grad_buffer().data();
          parallel_for(
              OC * IC,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t pair = begin; pair < end; ++pair) {
                  const std::int64_t ic = pair % IC;
                  const std::int64_t oc = pair / IC;
                  for (std::int64_t ky = 0; ky < K; ++ky) {
                    for (std::int64_t kx = 0; kx < K; ++kx) {
                      double acc = 0.0;
                      for (std::int64_t b = 0; b < B; ++b) {
                        for (std::int64_t oy = 0; oy < OH; ++oy) {
                          const std::int64_t iy = oy * S + ky - P;
                          if (iy < 0 || iy >= H) continue;
                          const double* g_row = gout + ((b * OC + oc) * OH + oy) * OW;
                          const double* in_row = in + ((b * IC + ic) * H + iy) * W;
                          for (std::int64_t ox = 0; ox < OW; ++ox) {
                            const std::int64_t ix = ox * S + kx - P;
                            if (ix < 0 || ix >= W) continue;
                            acc += g_row[ox] * in_row[ix];
                          }
                        }
                      }
                      gw[((oc * IC + ic) * K + ky) * K + kx] += acc;
                    }
                  }
                }
              },
              detail::row_grain(K * K * B * OH * OW));
        }
        if (b_node->requires_grad) {
          double* gb = b_node->grad_buffer().data();
          for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t oc = 0; oc < OC; ++oc) {
              const double* g_plane = gout + (b * OC + oc) * OH * OW;
              double acc = 0.0;
              for (std::int64_t i = 0; i < OH * OW; ++i) acc += g_plane[i];
              gb[oc] += acc;
            }
          }
        }
      });
}

inline Tensor transposed_conv2d(const Tensor& input, const ConvSpec& spec) {
  detail::check_conv_input(input, spec, "transposed_conv2d");
  if (!spec.transposed) {
    throw ShapeError("transposed_conv2d: spec is not transposed; use conv2d");
  }
  const std::int64_t B = input.extent(0), IC = input.extent(1), H = input.extent(2),
                     W = input.extent(3);
  const std::int64_t OC = spec.out_channels, K = spec.kernel, S = spec.stride, P = spec.padding;
  const std::int64_t OH = (H - 1) * S - 2 * P + K;
  const std::int64_t OW = (W - 1) * S - 2 * P + K;
  if (OH < 1 || OW < 1) {
    throw ShapeError("transposed_conv2d: output collapses for input " + shape_str(input.shape()));
  }

  std::vector<double> out(static_cast<std::size_t>(B * OC * OH * OW));
  const double* in = input.values().data();
  const double* w = spec.weight.values().data();
  const double* bias = spec.bias.values().data();

  parallel_for(
      B * OC * OH,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
          const std::int64_t oy = r % OH;
          const std::int64_t oc = (r / OH) % OC;
          const std::int64_t b = r / (OH * OC);
          double* out_row = out.data() + r * OW;
          for (std::int64_t ox = 0; ox < OW; ++ox) {
            double acc = bias[oc];
            for (std::int64_t ky = 0; ky < K; ++ky) {
              const std::int64_t iy_num = oy + P - ky;
              if (iy_num < 0 || iy_num % S != 0) continue;
              const std::int64_t iy = iy_num / S;
              if (iy >= H) continue;
              for (std::int64_t kx = 0; kx < K; ++kx) {
                const std::int64_t ix_num = ox + P - kx;
                if (ix_num < 0 || ix_num % S != 0) continue;
                const std::int64_t ix = ix_num / S;
                if (ix >= W) continue;
                for (std::int64_t ic = 0; ic < IC; ++ic) {
                  acc += in[((b * IC + ic) * H + iy) * W + ix] *
                         w[((ic * OC + oc) * K + ky) * K + kx];
                }
              }
            }
            out_row[ox] = acc;
          }
        }
      },
      detail::row_grain(OW * IC * K * K / std::max<std::int64_t>(S * S, 1)));

  auto in_node = input.node();
  auto w_node = spec.weight.node();
  auto b_node = spec.bias.node();
  return Tensor::make_op(
      "transposed_conv2d", {B, OC, OH, OW}, std::move(out), {input, spec.weight, spec.bias},
      [in_node, w_node, b_node, B, IC, OC, H, W, OH, OW, K, S, P](detail::TensorNode& o) {
        const double* gout = o.grad.data();
        const double* in = in_node->data.data();
        const double* w = w_node->data.data();
        if (in_node->requires_grad) {
          // Adjoint of the forward map: a plain strided convolution of gout.
          double* gin = in_node->grad_buffer().data();
          parallel_for(
              B * IC * H,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t r = begin; r < end; ++r) {
                  const std::int64_t iy = r % H;
                  const std::int64_t ic = (r / H) % IC;
                  const std::int64_t b = r / (H * IC);
                  double* gin_row = gin + r * W;
                  for (std::int64_t ix = 0; ix < W; ++ix) {
                    double acc = 0.0;
                    for (std::int64_t oc = 0; oc < OC; ++oc) {
                      const double* g_plane = gout + (b * OC + oc) * OH * OW;
                      const double* w_plane = w + (ic * OC + oc) * K * K;
                      for (std::int64_t ky = 0; ky < K; ++ky) {
                        const std::int64_t oy = iy * S - P + ky;
                        if (oy < 0 || oy >= OH) continue;
                        for (std::int64_t kx = 0; kx < K; ++kx) {
                          const std::int64_t ox = ix * S - P + kx;
                          if (ox < 0 || ox >= OW) continue;
                          acc += g_plane[oy * OW + ox] * w_plane[ky * K + kx];
                        }
                      }
                    }
                    gin_row[ix] += acc;
                  }
                }
              },
              detail::row_grain(W * OC * K * K));
        }
        if (w_node->requires_grad) {
          double* gw = w_node->grad_buffer().data();
          parallel_for(
              IC * OC,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t pair = begin; pair < end; ++pair) {
                  const std::int64_t oc = pair % OC;
                  const std::int64_t ic = pair / OC;
                  for (std::int64_t ky = 0; ky < K; ++ky) {
                    for (std::int64_t kx = 0; kx < K; ++kx) {
                      double acc = 0.0;
                      for (std::int64_t b = 0; b < B; ++b) {
                        for (std::int64_t iy = 0; iy < H; ++iy) {
                          const std::int64_t oy = iy * S - P + ky;
                          if (oy < 0 || oy >= OH) continue;
                          const double* in_row = in + ((b * IC + ic) * H + iy) * W;
                          const double* g_row = gout + ((b * OC + oc) * OH + oy) * OW;
                          for (std::int64_t ix = 0; ix < W; ++ix) {
                            const std::int64_t ox = ix * S - P + kx;
                            if (ox < 0 || ox >= OW) continue;
                            acc += in_row[ix] * g_row[ox];
                          }
                        }
                      }
                      gw[((ic * OC + oc) * K + ky) * K + kx] += acc;
                    }
                  }
                }
              },
              detail::row_grain(K * K * B * H * W));
        }
        if (b_node->requires_grad) {
          double* gb = b_node->grad_buffer().data();
          for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t oc = 0; oc < OC; ++oc) {
              const double* g_plane = gout + (b * OC + oc) * OH * OW;
              double acc = 0.0;
              for (std::int64_t i = 0; i < OH * OW; ++i) acc += g_plane[i];
              gb[oc] += acc;
            }
          }
        }
      });
}

// x for x >= 0, slope * x otherwise. Gradient at x == 0 takes the x >= 0
// branch.
inline Tensor leaky_relu(const Tensor& input, double slope) {
  std::vector<double> out(input.values());
  for (auto& v : out) {
    if (v < 0.0) v *= slope;
  }
  auto in_node = input.node();
  return Tensor::make_op("leaky_relu", input.shape(), std::move(out), {input},
                         [in_node, slope](detail::TensorNode& o) {
                           if (!in_node->requires_grad) return;
                           auto& g = in_node->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             g[i] += o.grad[i] * (in_node->data[i] >= 0.0 ? 1.0 : slope);
                           }
                         });
}

}  // namespace fadnet
