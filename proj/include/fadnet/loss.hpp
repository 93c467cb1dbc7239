#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fadnet/ops.hpp"
#include "fadnet/tensor.hpp"
#include "fadnet/warp.hpp"

namespace fadnet {

// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise. Continuous with continuous first
// derivative at |x| = 1.
inline Tensor smooth_l1(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) {
    v = std::fabs(v) < 1.0 ? 0.5 * v * v : std::fabs(v) - 0.5;
  }
  auto xn = x.node();
  return Tensor::make_op("smooth_l1", x.shape(), std::move(out), {x},
                         [xn](detail::TensorNode& o) {
                           if (!xn->requires_grad) return;
                           auto& g = xn->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             const double v = xn->data[i];
                             const double d = std::fabs(v) < 1.0 ? v : (v > 0.0 ? 1.0 : -1.0);
                             g[i] += d * o.grad[i];
                           }
                         });
}

// Mean smooth-L1 between ground truth and prediction over valid pixels;
// the mask is a 0/1 tensor and N is the valid count.
inline Tensor scale_loss(const Tensor& d_gt, const Tensor& d_hat, const Tensor& mask) {
  if (d_gt.shape() != d_hat.shape() || d_gt.shape() != mask.shape()) {
    throw ShapeError("scale_loss: shapes differ: gt " + shape_str(d_gt.shape()) + ", pred " +
                     shape_str(d_hat.shape()) + ", mask " + shape_str(mask.shape()));
  }
  double valid = 0.0;
  for (double v : mask.values()) valid += v != 0.0 ? 1.0 : 0.0;
  if (valid == 0.0) throw DegenerateError("scale_loss: sample has no valid pixels");
  Tensor per_pixel = mul(smooth_l1(sub(d_gt, d_hat)), mask);
  return mul_scalar(sum(per_pixel), 1.0 / valid);
}

// Per-round loss weights (one per scale, fine to coarse) and epoch count.
struct LossRound {
  std::vector<double> weights;
  int epochs = 0;
};

struct LossSchedule {
  std::vector<LossRound> rounds;

  int total_epochs() const {
    int n = 0;
    for (const auto& r : rounds) n += r.epochs;
    return n;
  }

  // Round index for a zero-based epoch.
  int round_of_epoch(int epoch) const {
    int acc = 0;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      acc += rounds[i].epochs;
      if (epoch < acc) return static_cast<int>(i);
    }
    return static_cast<int>(rounds.size()) - 1;
  }

  // Cumulative epoch index at the end of each round.
  std::vector<int> round_boundaries() const {
    std::vector<int> out;
    int acc = 0;
    for (const auto& r : rounds) {
      acc += r.epochs;
      out.push_back(acc);
    }
    return out;
  }
};

// The four-round coarse-to-fine weight schedule.
inline LossSchedule default_loss_schedule() {
  LossSchedule s;
  s.rounds = {
      {{0.32, 0.16, 0.08, 0.04, 0.02, 0.01, 0.005}, 20},
      {{0.6, 0.32, 0.08, 0.04, 0.02, 0.01, 0.005}, 20},
      {{0.8, 0.16, 0.04, 0.02, 0.01, 0.005, 0.0025}, 20},
      {{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 30},
  };
  return s;
}

// Weighted sum of per-scale losses. Scales with zero weight are skipped
// entirely, so no gradient flows through them.
inline Tensor total_loss(const std::vector<Tensor>& d_hat, const std::vector<Tensor>& gt,
                         const std::vector<Tensor>& masks, const std::vector<double>& weights) {
  if (d_hat.size() != gt.size() || d_hat.size() != masks.size()) {
    throw ConfigError("total_loss: pyramid sizes differ: pred " + std::to_string(d_hat.size()) +
                      ", gt " + std::to_string(gt.size()) + ", masks " +
                      std::to_string(masks.size()));
  }
  if (weights.size() != d_hat.size()) {
    throw ConfigError("total_loss: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(d_hat.size()) + " scales");
  }
  Tensor acc;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    if (weights[s] == 0.0) continue;
    Tensor term = mul_scalar(scale_loss(gt[s], d_hat[s], masks[s]), weights[s]);
    acc = acc.defined() ? add(acc, term) : term;
  }
  if (!acc.defined()) return Tensor::scalar(0.0);
  return acc;
}

// Ground-truth pyramid: average-pool downsampling with disparity values
// rescaled into scale-local pixel units. Pooling runs over valid pixels
// only, so sparse ground truth stays usable; a downsampled pixel is invalid
// only when its whole source block is.
struct GtPyramid {
  std::vector<Tensor> gt;
  std::vector<Tensor> mask;
};

inline GtPyramid make_gt_pyramid(const Tensor& gt_full, const Tensor& mask_full,
                                 std::int64_t scales) {
  if (gt_full.ndim() != 4 || gt_full.shape() != mask_full.shape()) {
    throw ShapeError("make_gt_pyramid: gt " + shape_str(gt_full.shape()) + " vs mask " +
                     shape_str(mask_full.shape()));
  }
  const std::int64_t H = gt_full.extent(2), W = gt_full.extent(3);
  GtPyramid p;
  p.gt.push_back(gt_full);
  p.mask.push_back(mask_full);
  for (std::int64_t s = 1; s < scales; ++s) {
    const std::int64_t f = std::int64_t{1} << s;
    const double unit = 1.0 / static_cast<double>(f);
    const std::int64_t OH = H / f, OW = W / f;
    if (OH * f != H || OW * f != W) {
      throw ShapeError("make_gt_pyramid: extents not divisible by " + std::to_string(f));
    }
    Tensor g = Tensor::zeros({1, 1, OH, OW});
    Tensor m = Tensor::zeros({1, 1, OH, OW});
    for (std::int64_t oy = 0; oy < OH; ++oy) {
      for (std::int64_t ox = 0; ox < OW; ++ox) {
        double acc = 0.0, n = 0.0;
        for (std::int64_t dy = 0; dy < f; ++dy) {
          for (std::int64_t dx = 0; dx < f; ++dx) {
            const std::size_t i =
                static_cast<std::size_t>((oy * f + dy) * W + (ox * f + dx));
            if (mask_full.values()[i] != 0.0) {
              acc += gt_full.values()[i];
              n += 1.0;
            }
          }
        }
        if (n > 0.0) {
          g.values()[static_cast<std::size_t>(oy * OW + ox)] = acc / n * unit;
          m.values()[static_cast<std::size_t>(oy * OW + ox)] = 1.0;
        }
      }
    }
    p.gt.push_back(g);
    p.mask.push_back(m);
  }
  return p;
}

}  // namespace fadnet
