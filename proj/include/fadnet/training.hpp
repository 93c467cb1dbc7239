#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fadnet/disparity_io.hpp"
#include "fadnet/loss.hpp"
#include "fadnet/metrics.hpp"
#include "fadnet/network.hpp"
#include "fadnet/synthetic.hpp"

namespace fadnet {

// First stage plus optional refiner, trained and checkpointed as one unit.
struct StackedModel {
  Network costvol;
  std::optional<Network> refine;

  DisparityPyramid forward(const Tensor& left, const Tensor& right) const {
    return refine ? forward_stacked(left, right, costvol, *refine)
                  : forward_costvol_pyramid(left, right, costvol);
  }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& [name, t] : costvol.named_parameters()) out.emplace_back("netc." + name, t);
    if (refine) {
      for (auto& [name, t] : refine->named_parameters()) out.emplace_back("nets." + name, t);
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

inline StackedModel build_model(const NetworkConfig& cfg, std::uint64_t seed,
                                bool with_refinement = true) {
  StackedModel m;
  m.costvol = build_costvol_net(cfg, seed);
  if (with_refinement) m.refine = build_refine_net(cfg, seed + 0x9e3779b97f4a7c15ULL);
  return m;
}

// Adaptive-moment optimiser over an explicit parameter list.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }

  // Gradient buffers are owned by the caller's graph; reset them explicitly
  // before each backward pass.
  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (!p.has_grad()) continue;
      const auto& g = p.grad();
      auto& data = p.values();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < data.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double update = cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
        data[i] -= update;
      }
    }
  }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
  AdamConfig cfg_;
};

// Full-resolution end-point error of the (clamped) finest prediction,
// averaged over samples. Predictions pass through the 32-bit disparity-map
// type, so the number matches what a written-then-evaluated PFM produces.
inline double evaluate_epe(const StackedModel& model, const std::vector<StereoSample>& samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& s : samples) {
    DisparityPyramid pyr = model.forward(s.left, s.right);
    DisparityMap pred = DisparityMap::from_tensor(pyr.d_hat[0], /*clamp_nonneg=*/true);
    DisparityMap gt =
        DisparityMap::from_tensor(s.disparity_gt, /*clamp_nonneg=*/false, &s.valid_mask);
    acc += epe(pred, gt);
  }
  return acc / static_cast<double>(samples.size());
}

struct EpochRecord {
  int epoch = 0;  // 1-based cumulative
  int round = 0;  // 1-based
  double train_loss = 0.0;
  double train_epe = 0.0;
  double test_epe = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::vector<int> round_boundary_epochs;
  std::vector<double> round_boundary_test_epe;

  double final_test_epe() const {
    return epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : epochs.back().test_epe;
  }

  // Line-delimited tabular dump: one row per epoch, then one boundary line
  // per round.
  std::string to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "# epoch round train_loss train_epe test_epe\n";
    for (const auto& r : epochs) {
      os << r.epoch << ' ' << r.round << ' ' << r.train_loss << ' ' << r.train_epe << ' '
         << r.test_epe << '\n';
    }
    for (std::size_t i = 0; i < round_boundary_epochs.size(); ++i) {
      os << "# round-boundary " << i + 1 << ' ' << round_boundary_epochs[i] << ' '
         << round_boundary_test_epe[i] << '\n';
    }
    return os.str();
  }
};

struct TrainOptions {
  AdamConfig adam{};
  std::uint64_t seed = 0;
  std::vector<StereoSample> test_set{};
};

// Multi-round training: each round applies its loss weights for its epoch
// count, with deterministic per-epoch shuffling and one optimiser step per
// sample. Aborts on a non-finite loss.
inline TrainingLog train(StackedModel& model, const std::vector<StereoSample>& dataset,
                         const LossSchedule& schedule, const TrainOptions& opts) {
  if (dataset.empty()) throw ConfigError("train: dataset is empty");
  for (const auto& s : dataset) {
    detail::check_stereo_input(s.left, s.right, model.costvol.cfg);
  }
  const std::int64_t scales = model.costvol.cfg.scales;
  std::vector<GtPyramid> gt_pyramids;
  gt_pyramids.reserve(dataset.size());
  for (const auto& s : dataset) {
    gt_pyramids.push_back(make_gt_pyramid(s.disparity_gt, s.valid_mask, scales));
  }

  Adam opt(model.parameters(), opts.adam);
  TrainingLog log;
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  int epoch_global = 0;
  for (std::size_t round = 0; round < schedule.rounds.size(); ++round) {
    const auto& weights = schedule.rounds[round].weights;
    if (static_cast<std::int64_t>(weights.size()) != scales) {
      throw ConfigError("train: round " + std::to_string(round + 1) + " has " +
                        std::to_string(weights.size()) + " weights for " +
                        std::to_string(scales) + " scales");
    }
    for (int e = 0; e < schedule.rounds[round].epochs; ++e) {
      Rng shuffle_rng(opts.seed ^
                      (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch_global + 1)));
      shuffle_rng.shuffle(order);

      double loss_acc = 0.0;
      double epe_acc = 0.0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        const StereoSample& s = dataset[order[k]];
        const GtPyramid& gt = gt_pyramids[order[k]];
        opt.zero_grad();
        DisparityPyramid pyr = model.forward(s.left, s.right);
        Tensor loss = total_loss(pyr.d_hat, gt.gt, gt.mask, weights);
        const double loss_value = loss.values()[0];
        if (!std::isfinite(loss_value)) {
          throw TrainingError("training diverged: non-finite loss at epoch " +
                              std::to_string(epoch_global + 1) + ", sample " +
                              std::to_string(order[k]));
        }
        loss.backward();
        opt.step();
        loss_acc += loss_value;
        DisparityMap pred = DisparityMap::from_tensor(pyr.d_hat[0], true);
        DisparityMap gt0 = DisparityMap::from_tensor(s.disparity_gt, false, &s.valid_mask);
        epe_acc += epe(pred, gt0);
      }
      ++epoch_global;
      EpochRecord rec;
      rec.epoch = epoch_global;
      rec.round = static_cast<int>(round) + 1;
      rec.train_loss = loss_acc / static_cast<double>(dataset.size());
      rec.train_epe = epe_acc / static_cast<double>(dataset.size());
      rec.test_epe = evaluate_epe(model, opts.test_set);
      log.epochs.push_back(rec);
    }
    log.round_boundary_epochs.push_back(epoch_global);
    log.round_boundary_test_epe.push_back(log.epochs.empty()
                                              ? std::numeric_limits<double>::quiet_NaN()
                                              : log.epochs.back().test_epe);
  }
  return log;
}

}  // namespace fadnet
