#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fadnet/tensor.hpp"

// Elementwise, reduction and layout primitives. Broadcasting is restricted
// to the batch axis: operands must match exactly except that either side may
// have batch extent 1.

namespace fadnet {

namespace detail {

struct BroadcastPlan {
  Shape out_shape;
  std::int64_t batch = 1;        // output batch extent
  std::int64_t inner = 1;        // elements per batch slice
  bool a_broadcast = false;      // a has batch extent 1, output batch > 1
  bool b_broadcast = false;
};

inline BroadcastPlan broadcast_batch(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  for (std::size_t d = 1; d < sa.size(); ++d) {
    if (sa[d] != sb[d]) {
      throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(sa) + " vs " +
                       shape_str(sb) + " (only the batch axis may broadcast)");
    }
  }
  BroadcastPlan plan;
  if (sa.empty()) {
    plan.out_shape = sa;
    return plan;
  }
  if (sa[0] != sb[0] && sa[0] != 1 && sb[0] != 1) {
    throw ShapeError(std::string(op) + ": batch extents " + std::to_string(sa[0]) + " vs " +
                     std::to_string(sb[0]) + " do not broadcast");
  }
  plan.out_shape = sa;
  plan.out_shape[0] = std::max(sa[0], sb[0]);
  plan.batch = plan.out_shape[0];
  plan.inner = numel_of(plan.out_shape) / std::max<std::int64_t>(plan.batch, 1);
  plan.a_broadcast = sa[0] == 1 && plan.batch > 1;
  plan.b_broadcast = sb[0] == 1 && plan.batch > 1;
  return plan;
}

// Accumulates src into dst->grad, collapsing the batch axis when the parent
// was broadcast.
inline void accumulate_grad(const std::shared_ptr<TensorNode>& dst, const std::vector<double>& src,
                            std::int64_t batch, std::int64_t inner, bool broadcast) {
  if (!dst->requires_grad) return;
  auto& g = dst->grad_buffer();
  if (!broadcast) {
    for (std::size_t i = 0; i < src.size(); ++i) g[i] += src[i];
    return;
  }
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* s = src.data() + b * inner;
    for (std::int64_t i = 0; i < inner; ++i) g[static_cast<std::size_t>(i)] += s[i];
  }
}

template <typename Fwd, typename Bwd>
Tensor binary_elementwise(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  auto plan = broadcast_batch(a, b, op);
  std::vector<double> out(static_cast<std::size_t>(numel_of(plan.out_shape)));
  const auto& da = a.values();
  const auto& db = b.values();
  for (std::int64_t i = 0; i < plan.batch; ++i) {
    const double* pa = da.data() + (plan.a_broadcast ? 0 : i * plan.inner);
    const double* pb = db.data() + (plan.b_broadcast ? 0 : i * plan.inner);
    double* po = out.data() + i * plan.inner;
    for (std::int64_t j = 0; j < plan.inner; ++j) po[j] = fwd(pa[j], pb[j]);
  }
  auto an = a.node();
  auto bn = b.node();
  return Tensor::make_op(op, plan.out_shape, std::move(out), {a, b},
                         [an, bn, plan, bwd](detail::TensorNode& o) {
                           const std::size_t n = o.grad.size();
                           std::vector<double> ga(n), gb(n);
                           for (std::int64_t i = 0; i < plan.batch; ++i) {
                             const double* pa = an->data.data() + (plan.a_broadcast ? 0 : i * plan.inner);
                             const double* pb = bn->data.data() + (plan.b_broadcast ? 0 : i * plan.inner);
                             const double* pg = o.grad.data() + i * plan.inner;
                             double* pga = ga.data() + i * plan.inner;
                             double* pgb = gb.data() + i * plan.inner;
                             for (std::int64_t j = 0; j < plan.inner; ++j) {
                               auto [dda, ddb] = bwd(pa[j], pb[j]);
                               pga[j] = pg[j] * dda;
                               pgb[j] = pg[j] * ddb;
                             }
                           }
                           accumulate_grad(an, ga, plan.batch, plan.inner, plan.a_broadcast);
                           accumulate_grad(bn, gb, plan.batch, plan.inner, plan.b_broadcast);
                         });
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary_elementwise(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return std::pair<double, double>(1.0, 1.0); });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary_elementwise(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return std::pair<double, double>(1.0, -1.0); });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary_elementwise(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y) { return std::pair<double, double>(y, x); });
}

inline Tensor mul_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (auto& v : out) v *= s;
  auto an = a.node();
  return Tensor::make_op("mul_scalar", a.shape(), std::move(out), {a},
                         [an, s](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * o.grad[i];
                         });
}

inline Tensor abs(const Tensor& a) {
  std::vector<double> out(a.values());
  for (auto& v : out) v = std::fabs(v);
  auto an = a.node();
  return Tensor::make_op("abs", a.shape(), std::move(out), {a},
                         [an](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             const double x = an->data[i];
                             const double d = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                             g[i] += d * o.grad[i];
                           }
                         });
}

// Elementwise max(x, s). Subgradient at the tie x == s is 0.
inline Tensor max_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (auto& v : out) v = std::max(v, s);
  auto an = a.node();
  return Tensor::make_op("max_scalar", a.shape(), std::move(out), {a},
                         [an, s](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (an->data[i] > s) g[i] += o.grad[i];
                           }
                         });
}

namespace detail {

inline std::vector<std::int64_t> normalize_axes(const Tensor& t, std::vector<std::int64_t> axes) {
  for (auto a : axes) {
    if (a < 0 || a >= t.ndim()) {
      throw AxisError("reduce axis " + std::to_string(a) + " out of range for rank " +
                      std::to_string(t.ndim()));
    }
  }
  std::sort(axes.begin(), axes.end());
  for (std::size_t i = 1; i < axes.size(); ++i) {
    if (axes[i] == axes[i - 1]) throw AxisError("duplicate reduce axis " + std::to_string(axes[i]));
  }
  return axes;
}

}  // namespace detail

namespace detail {

// Maps input linear indices to output linear indices of a keep-extent-1
// reduction; owns its stride tables so it can outlive the op call.
struct ReduceIndexMap {
  std::vector<std::int64_t> in_stride;
  std::vector<std::int64_t> out_stride;  // 0 on reduced axes
  std::vector<std::int64_t> in_extent;

  std::int64_t operator()(std::int64_t lin) const {
    std::int64_t out = 0;
    for (std::size_t d = 0; d < in_stride.size(); ++d) {
      const std::int64_t coord = (lin / in_stride[d]) % in_extent[d];
      out += coord * out_stride[d];
    }
    return out;
  }
};

}  // namespace detail

// Sum over an axis subset; reduced axes keep extent 1. Accumulation order is
// a single linear sweep of the input, so results are deterministic.
inline Tensor sum(const Tensor& a, std::vector<std::int64_t> axes) {
  axes = detail::normalize_axes(a, std::move(axes));
  Shape out_shape = a.shape();
  for (auto ax : axes) out_shape[static_cast<std::size_t>(ax)] = 1;

  const std::size_t rank = static_cast<std::size_t>(a.ndim());
  detail::ReduceIndexMap map;
  map.in_stride.assign(rank, 1);
  map.out_stride.assign(rank, 1);
  map.in_extent.assign(a.shape().begin(), a.shape().end());
  for (std::size_t d = rank - 1; d-- > 0;) {
    map.in_stride[d] = map.in_stride[d + 1] * a.shape()[d + 1];
    map.out_stride[d] = map.out_stride[d + 1] * out_shape[d + 1];
  }
  for (auto ax : axes) map.out_stride[static_cast<std::size_t>(ax)] = 0;

  std::vector<double> out(static_cast<std::size_t>(numel_of(out_shape)), 0.0);
  const auto& data = a.values();
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    out[static_cast<std::size_t>(map(i))] += data[static_cast<std::size_t>(i)];
  }
  auto an = a.node();
  const std::int64_t n_in = a.numel();
  return Tensor::make_op("sum", out_shape, std::move(out), {a},
                         [an, map, n_in](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::int64_t i = 0; i < n_in; ++i) {
                             g[static_cast<std::size_t>(i)] +=
                                 o.grad[static_cast<std::size_t>(map(i))];
                           }
                         });
}

// Full sum to a scalar of shape (1).
inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  auto an = a.node();
  return Tensor::make_op("sum", {1}, {total}, {a}, [an](detail::TensorNode& o) {
    if (!an->requires_grad) return;
    auto& g = an->grad_buffer();
    const double go = o.grad[0];
    for (auto& v : g) v += go;
  });
}

inline Tensor mean(const Tensor& a, std::vector<std::int64_t> axes) {
  std::int64_t reduced = 1;
  for (auto ax : detail::normalize_axes(a, axes)) reduced *= a.extent(ax);
  return mul_scalar(sum(a, std::move(axes)), 1.0 / static_cast<double>(reduced));
}

inline Tensor mean(const Tensor& a) {
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

// Concatenates along the channel axis (axis 1 of NCHW).
inline Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& s0 = parts[0].shape();
  if (s0.size() < 2) throw ShapeError("concat_channels: rank must be >= 2, got " + shape_str(s0));
  std::int64_t channels = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) {
      throw ShapeError("concat_channels: rank mismatch " + shape_str(s0) + " vs " + shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != 1 && s[d] != s0[d]) {
        throw ShapeError("concat_channels: non-channel extents differ: " + shape_str(s0) + " vs " +
                         shape_str(s));
      }
    }
    channels += s[1];
  }
  Shape out_shape = s0;
  out_shape[1] = channels;
  const std::int64_t batch = s0[0];
  std::int64_t plane = 1;
  for (std::size_t d = 2; d < s0.size(); ++d) plane *= s0[d];

  std::vector<double> out(static_cast<std::size_t>(numel_of(out_shape)));
  const std::int64_t out_slice = channels * plane;
  std::int64_t chan_off = 0;
  for (const auto& p : parts) {
    const std::int64_t pc = p.extent(1) * plane;
    const auto& src = p.values();
    for (std::int64_t b = 0; b < batch; ++b) {
      std::copy_n(src.data() + b * pc, pc, out.data() + b * out_slice + chan_off * plane);
    }
    chan_off += p.extent(1);
  }

  std::vector<std::shared_ptr<detail::TensorNode>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return Tensor::make_op(
      "concat_channels", out_shape, std::move(out), parts,
      [nodes, batch, plane, out_slice](detail::TensorNode& o) {
        std::int64_t chan_off = 0;
        for (const auto& n : nodes) {
          const std::int64_t nc = n->shape[1];
          if (n->requires_grad) {
            auto& g = n->grad_buffer();
            for (std::int64_t b = 0; b < batch; ++b) {
              const double* src = o.grad.data() + b * out_slice + chan_off * plane;
              double* dst = g.data() + b * nc * plane;
              for (std::int64_t i = 0; i < nc * plane; ++i) dst[i] += src[i];
            }
          }
          chan_off += nc;
        }
      });
}

// Contiguous slice along one axis.
inline Tensor slice(const Tensor& a, std::int64_t axis, std::int64_t start, std::int64_t length) {
  if (axis < 0 || axis >= a.ndim()) {
    throw AxisError("slice axis " + std::to_string(axis) + " out of range for rank " +
                    std::to_string(a.ndim()));
  }
  if (start < 0 || length < 1 || start + length > a.extent(axis)) {
    throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(start + length) +
                     ") out of bounds for extent " + std::to_string(a.extent(axis)));
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<std::size_t>(axis)] = length;
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= a.extent(d);
  for (std::int64_t d = axis + 1; d < a.ndim(); ++d) inner *= a.extent(d);
  const std::int64_t in_axis = a.extent(axis);

  std::vector<double> out(static_cast<std::size_t>(numel_of(out_shape)));
  const auto& src = a.values();
  for (std::int64_t e = 0; e < outer; ++e) {
    std::copy_n(src.data() + (e * in_axis + start) * inner, length * inner,
                out.data() + e * length * inner);
  }
  auto an = a.node();
  return Tensor::make_op("slice", out_shape, std::move(out), {a},
                         [an, outer, inner, in_axis, start, length](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::int64_t e = 0; e < outer; ++e) {
                             const double* src = o.grad.data() + e * length * inner;
                             double* dst = g.data() + (e * in_axis + start) * inner;
                             for (std::int64_t i = 0; i < length * inner; ++i) dst[i] += src[i];
                           }
                         });
}

// Zero padding, (before, after) per axis.
inline Tensor pad_zero(const Tensor& a, const std::vector<std::pair<std::int64_t, std::int64_t>>& pads) {
  if (static_cast<std::int64_t>(pads.size()) != a.ndim()) {
    throw AxisError("pad_zero: " + std::to_string(pads.size()) + " pad pairs for rank " +
                    std::to_string(a.ndim()));
  }
  Shape out_shape = a.shape();
  for (std::size_t d = 0; d < pads.size(); ++d) {
    if (pads[d].first < 0 || pads[d].second < 0) throw ShapeError("pad_zero: negative padding");
    out_shape[d] += pads[d].first + pads[d].second;
  }
  const std::int64_t rank = a.ndim();
  std::vector<std::int64_t> in_stride(static_cast<std::size_t>(rank), 1);
  std::vector<std::int64_t> out_stride(static_cast<std::size_t>(rank), 1);
  for (std::int64_t d = rank - 2; d >= 0; --d) {
    in_stride[d] = in_stride[d + 1] * a.shape()[d + 1];
    out_stride[d] = out_stride[d + 1] * out_shape[d + 1];
  }
  std::vector<double> out(static_cast<std::size_t>(numel_of(out_shape)), 0.0);
  const auto& src = a.values();
  for (std::int64_t lin = 0; lin < a.numel(); ++lin) {
    std::int64_t rem = lin;
    std::int64_t out_lin = 0;
    for (std::int64_t d = 0; d < rank; ++d) {
      const std::int64_t coord = rem / in_stride[d];
      rem %= in_stride[d];
      out_lin += (coord + pads[static_cast<std::size_t>(d)].first) * out_stride[d];
    }
    out[static_cast<std::size_t>(out_lin)] = src[static_cast<std::size_t>(lin)];
  }
  auto an = a.node();
  const std::int64_t n_in = a.numel();
  return Tensor::make_op("pad_zero", out_shape, std::move(out), {a},
                         [an, pads, in_stride, out_stride, rank, n_in](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::int64_t lin = 0; lin < n_in; ++lin) {
                             std::int64_t rem = lin;
                             std::int64_t out_lin = 0;
                             for (std::int64_t d = 0; d < rank; ++d) {
                               const std::int64_t coord = rem / in_stride[d];
                               rem %= in_stride[d];
                               out_lin += (coord + pads[static_cast<std::size_t>(d)].first) *
                                          out_stride[d];
                             }
                             g[static_cast<std::size_t>(lin)] +=
                                 o.grad[static_cast<std::size_t>(out_lin)];
                           }
                         });
}

// Reflective pad on the bottom/right edges up to multiples of `multiple`.
// Inference plumbing over plain values; the result is a fresh leaf.
inline Tensor pad_reflect_to_multiple(const Tensor& a, std::int64_t multiple) {
  if (a.ndim() != 4) throw ShapeError("pad_reflect_to_multiple: expects (b,c,h,w)");
  const std::int64_t H = a.extent(2), W = a.extent(3);
  const std::int64_t OH = (H + multiple - 1) / multiple * multiple;
  const std::int64_t OW = (W + multiple - 1) / multiple * multiple;
  if (OH - H >= H || OW - W >= W) {
    throw ShapeError("pad_reflect_to_multiple: image " + shape_str(a.shape()) +
                     " too small to mirror-pad to multiples of " + std::to_string(multiple));
  }
  if (OH == H && OW == W) return Tensor::from_data(a.shape(), a.values());
  const std::int64_t B = a.extent(0), C = a.extent(1);
  Tensor out = Tensor::zeros({B, C, OH, OW});
  for (std::int64_t p = 0; p < B * C; ++p) {
    for (std::int64_t y = 0; y < OH; ++y) {
      const std::int64_t sy = y < H ? y : 2 * H - 2 - y;
      for (std::int64_t x = 0; x < OW; ++x) {
        const std::int64_t sx = x < W ? x : 2 * W - 2 - x;
        out.values()[(p * OH + y) * OW + x] = a.values()[(p * H + sy) * W + sx];
      }
    }
  }
  return out;
}

// Top-left spatial crop to (h, w), as a fresh leaf.
inline Tensor crop_spatial(const Tensor& a, std::int64_t h, std::int64_t w) {
  if (a.ndim() != 4 || h > a.extent(2) || w > a.extent(3) || h < 1 || w < 1) {
    throw ShapeError("crop_spatial: cannot crop " + shape_str(a.shape()) + " to " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const std::int64_t B = a.extent(0), C = a.extent(1), H = a.extent(2), W = a.extent(3);
  Tensor out = Tensor::zeros({B, C, h, w});
  for (std::int64_t p = 0; p < B * C; ++p) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        out.values()[(p * h + y) * w + x] = a.values()[(p * H + y) * W + x];
      }
    }
  }
  return out;
}

inline Tensor reshape(const Tensor& a, Shape new_shape) {
  if (numel_of(new_shape) != a.numel()) {
    throw ShapeError("reshape " + shape_str(a.shape()) + " -> " + shape_str(new_shape) +
                     " changes element count");
  }
  auto an = a.node();
  return Tensor::make_op("reshape", std::move(new_shape), std::vector<double>(a.values()), {a},
                         [an](detail::TensorNode& o) {
                           if (!an->requires_grad) return;
                           auto& g = an->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                         });
}

}  // namespace fadnet
