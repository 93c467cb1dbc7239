#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fadnet/conv.hpp"
#include "fadnet/correlation.hpp"
#include "fadnet/ops.hpp"
#include "fadnet/tensor.hpp"
#include "fadnet/warp.hpp"

// Two-stage disparity estimation network with configurable width.
//
// Stage one (the cost-volume net) runs a shared residual encoder over the
// left and right images separately for three downsampling stages, matches
// the feature maps with a point-wise correlation layer, and continues
// encoding the merged features. Stage two (the refinement net) sees the
// images, the warped left reconstruction and the initial disparity, and
// predicts per-scale residuals. Both decoders emit one disparity head per
// scale, coarse to fine, each head feeding its upsampled prediction into the
// next finer merge. Final maps are the elementwise sum of first-stage
// predictions and refinement residuals at every scale.
//
// With S scales the pyramid spans full resolution down to 1/2^(S-1); encoder
// stages past the bottleneck resolution keep stride 1. Width is controlled
// by two multipliers applied to the per-layer base channel counts, one for
// the encoder and one for the decoder.

namespace fadnet {

enum class NetworkKind { cost_volume, refinement };

struct NetworkConfig {
  std::vector<std::int64_t> encoder_base{4, 8, 16, 32, 64, 64, 64};
  // Deconv output channels, coarse to fine (scales-1 entries). Defaults to
  // the mirror of encoder_base.
  std::vector<std::int64_t> decoder_base{64, 32, 16, 8, 4, 4};
  std::int64_t e_ratio = 1;
  std::int64_t d_ratio = 1;
  std::int64_t search_range = 8;  // correlation shifts at 1/8 resolution
  std::int64_t encoder_stages = 7;
  std::int64_t scales = 7;

  std::int64_t enc_channels(std::int64_t stage1based) const {
    return encoder_base[static_cast<std::size_t>(stage1based - 1)] * e_ratio;
  }
  std::int64_t dec_channels(std::int64_t coarse_index) const {
    return decoder_base[static_cast<std::size_t>(coarse_index)] * d_ratio;
  }
  std::int64_t divisor() const { return std::int64_t{1} << (scales - 1); }

  static std::vector<std::int64_t> mirror_decoder(const std::vector<std::int64_t>& enc,
                                                  std::int64_t scales) {
    std::vector<std::int64_t> dec;
    for (std::int64_t s = scales - 2; s >= 0; --s) {
      dec.push_back(enc[static_cast<std::size_t>(s >= 1 ? s - 1 : 0)]);
    }
    return dec;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
    if (scales < 4) fail("scales must be >= 4 (correlation sits at 1/8 resolution)");
    if (scales > encoder_stages) fail("scales exceed encoder stages");
    if (encoder_stages != static_cast<std::int64_t>(encoder_base.size())) {
      fail("encoder_base has " + std::to_string(encoder_base.size()) + " entries for " +
           std::to_string(encoder_stages) + " stages");
    }
    if (static_cast<std::int64_t>(decoder_base.size()) != scales - 1) {
      fail("decoder_base has " + std::to_string(decoder_base.size()) + " entries, need " +
           std::to_string(scales - 1));
    }
    if (e_ratio < 1 || d_ratio < 1) fail("ratios must be >= 1");
    if (search_range < 1) fail("search_range must be >= 1");
    for (auto c : encoder_base) {
      if (c < 1) fail("encoder base channels must be >= 1");
    }
    for (auto c : decoder_base) {
      if (c < 1) fail("decoder base channels must be >= 1");
    }
  }
};

inline std::int64_t input_channels(NetworkKind kind) {
  // Stacked left+right for stage one; left+right+warped left+initial
  // disparity for the refiner.
  return kind == NetworkKind::cost_volume ? 6 : 10;
}

struct ResidualBlock {
  ConvSpec conv1;  // 3x3, carries the block stride
  ConvSpec conv2;  // 3x3, stride 1
  std::optional<ConvSpec> proj;  // 1x1 shortcut when shape changes
};

struct EncoderStage {
  ResidualBlock pre;   // stride 1, changes channel count
  ResidualBlock down;  // stride 2 while above bottleneck resolution
};

struct DecoderStage {
  ConvSpec up;     // 4x4 stride-2 transposed conv
  ConvSpec merge;  // 3x3 over [up, skip, upsampled prediction]
  ConvSpec head;   // 3x3 -> 1 channel, no activation
};

struct Network {
  NetworkConfig cfg;
  NetworkKind kind = NetworkKind::cost_volume;
  std::vector<EncoderStage> encoder;
  ConvSpec corr_pre;             // cost-volume kind only
  ConvSpec bottleneck_head;      // coarsest-scale prediction
  std::vector<DecoderStage> decoder;  // coarse to fine

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    auto push = [&out](const std::string& name, const ConvSpec& c) {
      out.emplace_back(name + ".weight", c.weight);
      out.emplace_back(name + ".bias", c.bias);
    };
    auto push_block = [&](const std::string& name, const ResidualBlock& rb) {
      push(name + ".conv1", rb.conv1);
      push(name + ".conv2", rb.conv2);
      if (rb.proj) push(name + ".proj", *rb.proj);
    };
    for (std::size_t i = 0; i < encoder.size(); ++i) {
      const std::string base = "enc" + std::to_string(i + 1);
      push_block(base + ".pre", encoder[i].pre);
      push_block(base + ".down", encoder[i].down);
    }
    if (kind == NetworkKind::cost_volume) push("corr.pre", corr_pre);
    push("head" + std::to_string(cfg.scales - 1), bottleneck_head);
    for (std::size_t i = 0; i < decoder.size(); ++i) {
      const std::int64_t s = cfg.scales - 2 - static_cast<std::int64_t>(i);
      const std::string base = "dec" + std::to_string(s);
      push(base + ".up", decoder[i].up);
      push(base + ".merge", decoder[i].merge);
      push("head" + std::to_string(s), decoder[i].head);
    }
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : named_parameters()) n += t.numel();
    return n;
  }
};

namespace detail {

// Encoder stage stride: stages above the bottleneck resolution downsample.
inline std::int64_t stage_stride(const NetworkConfig& cfg, std::int64_t stage1based) {
  return stage1based <= cfg.scales - 1 ? 2 : 1;
}

inline std::int64_t stage_in_channels(const NetworkConfig& cfg, NetworkKind kind,
                                      std::int64_t stage1based) {
  if (stage1based == 1) {
    return kind == NetworkKind::cost_volume ? 3 : input_channels(kind);
  }
  std::int64_t ch = cfg.enc_channels(stage1based - 1);
  if (kind == NetworkKind::cost_volume && stage1based == 4) ch += cfg.search_range;
  return ch;
}

// Skip-connection channel count at a decoder scale.
inline std::int64_t skip_channels(const NetworkConfig& cfg, NetworkKind kind, std::int64_t s) {
  return s == 0 ? input_channels(kind) : cfg.enc_channels(s);
}

inline ResidualBlock make_resblock(std::int64_t in_ch, std::int64_t out_ch, std::int64_t stride,
                                   Rng& rng) {
  ResidualBlock rb;
  rb.conv1 = make_conv(in_ch, out_ch, 3, stride, 1, false, rng);
  rb.conv2 = make_conv(out_ch, out_ch, 3, 1, 1, false, rng);
  if (in_ch != out_ch || stride != 1) {
    rb.proj = make_conv(in_ch, out_ch, 1, stride, 0, false, rng);
  }
  return rb;
}

inline Network build_network(const NetworkConfig& cfg, NetworkKind kind, std::uint64_t seed) {
  cfg.validate();
  Network net;
  net.cfg = cfg;
  net.kind = kind;
  Rng rng(seed);

  for (std::int64_t i = 1; i <= cfg.encoder_stages; ++i) {
    EncoderStage stage;
    const std::int64_t in_ch = stage_in_channels(cfg, kind, i);
    const std::int64_t out_ch = cfg.enc_channels(i);
    stage.pre = make_resblock(in_ch, out_ch, 1, rng);
    stage.down = make_resblock(out_ch, out_ch, stage_stride(cfg, i), rng);
    net.encoder.push_back(std::move(stage));
  }

  if (kind == NetworkKind::cost_volume) {
    const std::int64_t c3 = cfg.enc_channels(3);
    net.corr_pre = make_conv(c3, c3, 3, 1, 1, false, rng);
  }

  const std::int64_t bottleneck_ch = cfg.enc_channels(cfg.encoder_stages);
  net.bottleneck_head = make_conv(bottleneck_ch, 1, 3, 1, 1, false, rng);

  std::int64_t feat_ch = bottleneck_ch;
  for (std::int64_t i = 0; i <= cfg.scales - 2; ++i) {
    const std::int64_t s = cfg.scales - 2 - i;
    DecoderStage stage;
    const std::int64_t out_ch = cfg.dec_channels(i);
    stage.up = make_conv(feat_ch, out_ch, 4, 2, 1, true, rng);
    stage.merge = make_conv(out_ch + skip_channels(cfg, kind, s) + 1, out_ch, 3, 1, 1, false, rng);
    stage.head = make_conv(out_ch, 1, 3, 1, 1, false, rng);
    net.decoder.push_back(std::move(stage));
    feat_ch = out_ch;
  }

  if (kind == NetworkKind::refinement) {
    // Residual heads start at zero so the stacked model begins exactly at
    // the first-stage predictions.
    auto zero = [](ConvSpec& c) {
      std::fill(c.weight.values().begin(), c.weight.values().end(), 0.0);
      std::fill(c.bias.values().begin(), c.bias.values().end(), 0.0);
    };
    zero(net.bottleneck_head);
    for (auto& stage : net.decoder) zero(stage.head);
  }
  return net;
}

inline Tensor run_resblock(const Tensor& x, const ResidualBlock& rb) {
  Tensor y = leaky_relu(conv2d(x, rb.conv1), 0.1);
  y = conv2d(y, rb.conv2);
  Tensor shortcut = rb.proj ? conv2d(x, *rb.proj) : x;
  return leaky_relu(add(y, shortcut), 0.1);
}

inline Tensor run_stage(const Tensor& x, const EncoderStage& stage) {
  return run_resblock(run_resblock(x, stage.pre), stage.down);
}

// Decoder pass shared by both kinds. enc_out[i] is the output of encoder
// stage i+1; skip at scale s is enc_out[s-1] (s >= 1) or `full_input`.
inline std::vector<Tensor> run_decoder(const Network& net, const std::vector<Tensor>& enc_out,
                                       const Tensor& full_input) {
  const std::int64_t S = net.cfg.scales;
  std::vector<Tensor> preds(static_cast<std::size_t>(S));
  Tensor feat = enc_out.back();
  preds[static_cast<std::size_t>(S - 1)] = conv2d(feat, net.bottleneck_head);
  for (std::size_t i = 0; i < net.decoder.size(); ++i) {
    const std::int64_t s = S - 2 - static_cast<std::int64_t>(i);
    const DecoderStage& stage = net.decoder[i];
    Tensor up = leaky_relu(transposed_conv2d(feat, stage.up), 0.1);
    Tensor pred_up = resample(preds[static_cast<std::size_t>(s + 1)], 2,
                              ResampleMode::up_bilinear, 2.0);
    Tensor skip = s == 0 ? full_input : enc_out[static_cast<std::size_t>(s - 1)];
    feat = leaky_relu(conv2d(concat_channels({up, skip, pred_up}), stage.merge), 0.1);
    preds[static_cast<std::size_t>(s)] = conv2d(feat, stage.head);
  }
  return preds;
}

inline void check_stereo_input(const Tensor& left, const Tensor& right,
                               const NetworkConfig& cfg) {
  if (left.ndim() != 4 || left.shape() != right.shape()) {
    throw ShapeError("stereo forward: left " + shape_str(left.shape()) + " vs right " +
                     shape_str(right.shape()));
  }
  const std::int64_t div = cfg.divisor();
  if (left.extent(2) % div != 0 || left.extent(3) % div != 0) {
    throw ShapeError("stereo forward: extents " + shape_str(left.shape()) +
                     " must be divisible by " + std::to_string(div));
  }
}

}  // namespace detail

inline Network build_costvol_net(const NetworkConfig& cfg, std::uint64_t seed) {
  return detail::build_network(cfg, NetworkKind::cost_volume, seed);
}

inline Network build_refine_net(const NetworkConfig& cfg, std::uint64_t seed) {
  return detail::build_network(cfg, NetworkKind::refinement, seed);
}

// First-stage forward: shared encoder trunk over each image, point-wise
// correlation after stage 3, merged encoding, then the multi-scale decoder.
// Returns predictions indexed by scale, fine to coarse.
inline std::vector<Tensor> forward_costvol(const Network& net, const Tensor& left,
                                           const Tensor& right) {
  if (net.kind != NetworkKind::cost_volume) {
    throw ContractError("forward_costvol on a refinement network");
  }
  detail::check_stereo_input(left, right, net.cfg);
  std::vector<Tensor> enc_out(static_cast<std::size_t>(net.cfg.encoder_stages));

  Tensor l = left, r = right;
  for (std::size_t i = 0; i < 3; ++i) {
    l = detail::run_stage(l, net.encoder[i]);
    r = detail::run_stage(r, net.encoder[i]);
    enc_out[i] = l;  // left-branch features feed skips and the merge
  }
  CorrelationSpec corr{net.cfg.search_range, 0};
  Tensor cost = correlation_pointwise(l, r, corr, net.corr_pre);
  Tensor x = concat_channels({l, cost});
  for (std::size_t i = 3; i < net.encoder.size(); ++i) {
    x = detail::run_stage(x, net.encoder[i]);
    enc_out[i] = x;
  }
  return detail::run_decoder(net, enc_out, concat_channels({left, right}));
}

// Refinement forward over the 10-channel stack
// [left, right, warped left, initial disparity].
inline std::vector<Tensor> forward_refine(const Network& net, const Tensor& stack) {
  if (net.kind != NetworkKind::refinement) {
    throw ContractError("forward_refine on a cost-volume network");
  }
  if (stack.ndim() != 4 || stack.extent(1) != input_channels(NetworkKind::refinement)) {
    throw ShapeError("forward_refine: expected " +
                     std::to_string(input_channels(NetworkKind::refinement)) +
                     "-channel stack, got " + shape_str(stack.shape()));
  }
  std::vector<Tensor> enc_out(static_cast<std::size_t>(net.cfg.encoder_stages));
  Tensor x = stack;
  for (std::size_t i = 0; i < net.encoder.size(); ++i) {
    x = detail::run_stage(x, net.encoder[i]);
    enc_out[i] = x;
  }
  return detail::run_decoder(net, enc_out, stack);
}

// Per-scale outputs of a stacked forward pass: first-stage maps c, residuals
// r, and final maps d_hat = c + r, indexed fine to coarse.
struct DisparityPyramid {
  std::vector<Tensor> c;
  std::vector<Tensor> r;
  std::vector<Tensor> d_hat;
};

// Full two-stage forward: first-stage disparities, warped left
// reconstruction, refinement residuals, and their per-scale sums. The whole
// pipeline is differentiable end to end.
inline DisparityPyramid forward_stacked(const Tensor& left, const Tensor& right,
                                        const Network& costvol_net, const Network& refine_net) {
  detail::check_stereo_input(left, right, costvol_net.cfg);
  DisparityPyramid pyr;
  pyr.c = forward_costvol(costvol_net, left, right);
  Tensor warped = warp_right_to_left(right, pyr.c[0]);
  Tensor stack = concat_channels({left, right, warped, pyr.c[0]});
  pyr.r = forward_refine(refine_net, stack);
  for (std::size_t s = 0; s < pyr.c.size(); ++s) {
    pyr.d_hat.push_back(add(pyr.c[s], pyr.r[s]));
  }
  return pyr;
}

// First stage alone, packaged as a pyramid with zero residuals.
inline DisparityPyramid forward_costvol_pyramid(const Tensor& left, const Tensor& right,
                                                const Network& costvol_net) {
  DisparityPyramid pyr;
  pyr.c = forward_costvol(costvol_net, left, right);
  for (const auto& c : pyr.c) {
    pyr.r.push_back(Tensor::zeros(c.shape()));
    pyr.d_hat.push_back(c);
  }
  return pyr;
}

// Exact parameter tally from the layer plan, without materialising weights.
struct LayerCount {
  std::string name;
  std::int64_t weight_params = 0;
  std::int64_t bias_params = 0;
};

inline std::vector<LayerCount> parameter_breakdown(const NetworkConfig& cfg, NetworkKind kind) {
  cfg.validate();
  std::vector<LayerCount> out;
  auto conv = [&out](const std::string& name, std::int64_t in_ch, std::int64_t out_ch,
                     std::int64_t k) {
    out.push_back({name, in_ch * out_ch * k * k, out_ch});
  };
  auto block = [&](const std::string& name, std::int64_t in_ch, std::int64_t out_ch,
                   std::int64_t stride) {
    conv(name + ".conv1", in_ch, out_ch, 3);
    conv(name + ".conv2", out_ch, out_ch, 3);
    if (in_ch != out_ch || stride != 1) conv(name + ".proj", in_ch, out_ch, 1);
  };
  for (std::int64_t i = 1; i <= cfg.encoder_stages; ++i) {
    const std::string base = "enc" + std::to_string(i);
    block(base + ".pre", detail::stage_in_channels(cfg, kind, i), cfg.enc_channels(i), 1);
    block(base + ".down", cfg.enc_channels(i), cfg.enc_channels(i),
          detail::stage_stride(cfg, i));
  }
  if (kind == NetworkKind::cost_volume) {
    conv("corr.pre", cfg.enc_channels(3), cfg.enc_channels(3), 3);
  }
  conv("head" + std::to_string(cfg.scales - 1), cfg.enc_channels(cfg.encoder_stages), 1, 3);
  std::int64_t feat_ch = cfg.enc_channels(cfg.encoder_stages);
  for (std::int64_t i = 0; i <= cfg.scales - 2; ++i) {
    const std::int64_t s = cfg.scales - 2 - i;
    const std::string base = "dec" + std::to_string(s);
    const std::int64_t out_ch = cfg.dec_channels(i);
    conv(base + ".up", feat_ch, out_ch, 4);
    conv(base + ".merge", out_ch + detail::skip_channels(cfg, kind, s) + 1, out_ch, 3);
    conv("head" + std::to_string(s), out_ch, 1, 3);
    feat_ch = out_ch;
  }
  return out;
}

// Total parameter count of the stacked pair (first stage + refiner).
inline std::int64_t count_parameters(const NetworkConfig& cfg) {
  std::int64_t n = 0;
  for (auto kind : {NetworkKind::cost_volume, NetworkKind::refinement}) {
    for (const auto& layer : parameter_breakdown(cfg, kind)) {
      n += layer.weight_params + layer.bias_params;
    }
  }
  return n;
}

}  // namespace fadnet
