// Acceptance suite: one test per release criterion, each printing a
// [ACCEPTANCE] line when it holds. Training-based criteria run the pinned
// fixed-seed reference configuration.

#include <gtest/gtest.h>

#include <cstdio>

#include "fadnet/bench.hpp"
#include "fadnet/fadnet.hpp"
#include "oracles.hpp"

using namespace fadnet;

namespace {

constexpr double kEps = 1e-5;
constexpr double kGradTol = 1e-4;

NetworkConfig tiny_cfg(std::int64_t e = 1, std::int64_t d = 1, std::int64_t range = 8) {
  NetworkConfig cfg;
  cfg.e_ratio = e;
  cfg.d_ratio = d;
  cfg.search_range = range;
  return cfg;
}

void pass_line(int criterion, const char* what) {
  if (::testing::Test::HasFailure()) {
    std::printf("[ACCEPTANCE] criterion %d (%s): FAIL\n", criterion, what);
  } else {
    std::printf("[ACCEPTANCE] criterion %d (%s): PASS\n", criterion, what);
  }
  std::fflush(stdout);
}

double naive_total_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt,
                        const std::vector<Tensor>& mask, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    if (w[s] != 0.0) acc += w[s] * oracle::scale_loss(gt[s], pred[s], mask[s]);
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// 1. Operator-oracle suite: every numeric operator matches an independent
//    nested-loop reference on >= 20 random small instances.
TEST(Acceptance, C1_OperatorOracles) {
  Rng rng(101);
  for (int inst = 0; inst < 20; ++inst) {
    // conv2d / transposed_conv2d
    {
      const std::int64_t s = 1 + rng.index(2);
      Tensor in = Tensor::randn({1, 2, 6, 6}, rng);
      ConvSpec conv = make_conv(2, 3, 3, s, 1, false, rng);
      conv.bias = Tensor::randn({3}, rng, 0.3);
      EXPECT_LT(oracle::max_abs_diff(conv2d(in, conv),
                                     oracle::conv2d(in, conv.weight, conv.bias, s, 1)),
                1e-9);

      Tensor tin = Tensor::randn({1, 2, 4, 5}, rng);
      ConvSpec deconv = make_conv(2, 3, 4, 2, 1, true, rng);
      deconv.bias = Tensor::randn({3}, rng, 0.3);
      EXPECT_LT(oracle::max_abs_diff(
                    transposed_conv2d(tin, deconv),
                    oracle::transposed_conv2d(tin, deconv.weight, deconv.bias, 2, 1)),
                1e-9);
    }
    // correlation (patch and point-wise)
    {
      const std::int64_t D = 1 + rng.index(4);
      const std::int64_t k = rng.index(2);
      Tensor f1 = Tensor::randn({1, 3, 5, 8}, rng);
      Tensor f2 = Tensor::randn({1, 3, 5, 8}, rng);
      EXPECT_LT(oracle::max_abs_diff(correlation_patch(f1, f2, {D, k}),
                                     oracle::correlation_patch(f1, f2, D, k)),
                1e-9);

      ConvSpec pre = make_conv(3, 3, 3, 1, 1, false, rng);
      Tensor c1 = oracle::conv2d(f1, pre.weight, pre.bias, 1, 1);
      Tensor c2 = oracle::conv2d(f2, pre.weight, pre.bias, 1, 1);
      EXPECT_LT(oracle::max_abs_diff(correlation_pointwise(f1, f2, {D, 0}, pre),
                                     oracle::correlation_patch(c1, c2, D, 0)),
                1e-9);
    }
    // warp
    {
      Tensor img = Tensor::randn({1, 3, 5, 9}, rng);
      Tensor disp = Tensor::rand_uniform({1, 1, 5, 9}, rng, -1.0, 5.0);
      EXPECT_LT(oracle::max_abs_diff(warp_right_to_left(img, disp), oracle::warp(img, disp)),
                1e-9);
    }
    // smooth_l1 / scale_loss / total_loss (pure reductions at 1e-12)
    {
      Tensor x = Tensor::randn({3, 7}, rng, 2.0);
      Tensor y = smooth_l1(x);
      for (std::size_t i = 0; i < x.values().size(); ++i) {
        EXPECT_NEAR(y.values()[i], oracle::smooth_l1(x.values()[i]), 1e-12);
      }
      std::vector<Tensor> pred, gt, mask;
      for (std::int64_t s = 0; s < 7; ++s) {
        const std::int64_t e = std::int64_t{32} >> std::min<std::int64_t>(s, 4);
        pred.push_back(Tensor::randn({1, 1, e, e}, rng, 2.0));
        gt.push_back(Tensor::randn({1, 1, e, e}, rng, 2.0));
        Tensor m = Tensor::zeros({1, 1, e, e});
        for (auto& v : m.values()) v = rng.uniform() < 0.8 ? 1.0 : 0.0;
        m.values()[0] = 1.0;
        mask.push_back(m);
      }
      EXPECT_NEAR(scale_loss(gt[0], pred[0], mask[0]).values()[0],
                  oracle::scale_loss(gt[0], pred[0], mask[0]), 1e-12);
      const std::vector<double> w =
          default_loss_schedule().rounds[static_cast<std::size_t>(inst % 4)].weights;
      EXPECT_NEAR(total_loss(pred, gt, mask, w).values()[0], naive_total_loss(pred, gt, mask, w),
                  1e-12);
    }
    // epe / threshold metrics (1e-12)
    {
      DisparityMap pm = DisparityMap::sized(5, 4);
      DisparityMap gm = DisparityMap::sized(5, 4);
      for (std::size_t i = 0; i < pm.values.size(); ++i) {
        pm.values[i] = static_cast<float>(rng.uniform(0.0, 60.0));
        gm.values[i] = static_cast<float>(rng.uniform(0.0, 60.0));
        if (rng.uniform() < 0.15) gm.valid[i] = 0;
      }
      gm.valid[0] = pm.valid[0] = 1;
      double acc = 0.0, sq = 0.0;
      long n = 0, d1 = 0, bad2 = 0;
      for (std::size_t i = 0; i < pm.values.size(); ++i) {
        if (!pm.valid[i] || !gm.valid[i]) continue;
        const double err = std::fabs(double(pm.values[i]) - double(gm.values[i]));
        acc += err;
        sq += err * err;
        if (err > 3.0 && err > 0.05 * double(gm.values[i])) ++d1;
        if (err > 2.0) ++bad2;
        ++n;
      }
      EXPECT_NEAR(epe(pm, gm), acc / n, 1e-12);
      ThresholdMetrics t = threshold_metrics(pm, gm, {2.0});
      EXPECT_NEAR(t.rms, std::sqrt(sq / n), 1e-12);
      EXPECT_NEAR(t.d1_all, double(d1) / n, 1e-12);
      EXPECT_NEAR(t.bad[0], double(bad2) / n, 1e-12);
    }
  }
  pass_line(1, "operator oracles");
}

// ---------------------------------------------------------------------------
// 2. Gradient suite: central finite differences at tol 1e-4 (eps 1e-5) on
//    >= 5 seeds per operator, kinks probed directionally, plus the
//    end-to-end tiny forward pass.
TEST(Acceptance, C2_GradientSuite) {
  auto expect_pass = [](const TensorOp& op, const std::function<std::vector<Tensor>(Rng&)>& gen,
                        std::int64_t max_probes = -1) {
    for (int seed = 0; seed < 5; ++seed) {
      Rng rng(4000 + 17 * seed);
      GradientReport rep =
          check_gradient(op, gen(rng), kEps, kGradTol, max_probes, 99 + seed);
      EXPECT_TRUE(rep.pass) << "seed " << seed << " max_rel_err " << rep.max_rel_err;
    }
  };
  auto away = [](Shape shape, Rng& rng) {
    Tensor t = Tensor::randn(std::move(shape), rng);
    for (auto& v : t.values()) {
      if (std::fabs(v) < 0.05) v += v >= 0.0 ? 0.05 : -0.05;
    }
    return t;
  };

  // Primitives.
  expect_pass([](const std::vector<Tensor>& in) { return add(in[0], in[1]); },
              [](Rng& rng) {
                return std::vector<Tensor>{Tensor::randn({2, 3, 4, 4}, rng),
                                           Tensor::randn({2, 3, 4, 4}, rng)};
              });
  expect_pass([](const std::vector<Tensor>& in) { return mul(in[0], in[1]); },
              [](Rng& rng) {
                return std::vector<Tensor>{Tensor::randn({2, 3, 4, 4}, rng),
                                           Tensor::randn({2, 3, 4, 4}, rng)};
              });
  expect_pass([](const std::vector<Tensor>& in) { return mean(sum(in[0], {1})); },
              [](Rng& rng) { return std::vector<Tensor>{Tensor::randn({2, 3, 5}, rng)}; });
  expect_pass([&away](const std::vector<Tensor>& in) { return abs(in[0]); },
              [&away](Rng& rng) { return std::vector<Tensor>{away({3, 5}, rng)}; });
  expect_pass([](const std::vector<Tensor>& in) { return max_scalar(in[0], 0.0); },
              [&away](Rng& rng) { return std::vector<Tensor>{away({3, 5}, rng)}; });
  expect_pass(
      [](const std::vector<Tensor>& in) {
        return slice(concat_channels({in[0], in[1]}), 1, 1, 3);
      },
      [](Rng& rng) {
        return std::vector<Tensor>{Tensor::randn({1, 2, 3, 3}, rng),
                                   Tensor::randn({1, 2, 3, 3}, rng)};
      });
  expect_pass(
      [](const std::vector<Tensor>& in) {
        return reshape(pad_zero(in[0], {{0, 0}, {0, 1}, {1, 1}, {0, 0}}), {1, 45});
      },
      [](Rng& rng) { return std::vector<Tensor>{Tensor::randn({1, 2, 3, 3}, rng)}; });

  // Stereo operators.
  expect_pass([&away](const std::vector<Tensor>& in) { return leaky_relu(in[0], 0.1); },
              [&away](Rng& rng) { return std::vector<Tensor>{away({2, 3, 4, 4}, rng)}; });
  for (std::int64_t stride : {std::int64_t{1}, std::int64_t{2}}) {
    expect_pass(
        [stride](const std::vector<Tensor>& in) {
          ConvSpec spec{2, 3, 3, stride, 1, false, in[1], in[2]};
          return conv2d(in[0], spec);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{Tensor::randn({1, 2, 6, 6}, rng),
                                     Tensor::randn({3, 2, 3, 3}, rng), Tensor::randn({3}, rng)};
        });
  }
  expect_pass(
      [](const std::vector<Tensor>& in) {
        ConvSpec spec{2, 3, 4, 2, 1, true, in[1], in[2]};
        return transposed_conv2d(in[0], spec);
      },
      [](Rng& rng) {
        return std::vector<Tensor>{Tensor::randn({1, 2, 4, 4}, rng),
                                   Tensor::randn({2, 3, 4, 4}, rng), Tensor::randn({3}, rng)};
      });
  for (std::int64_t k : {std::int64_t{0}, std::int64_t{1}}) {
    expect_pass(
        [k](const std::vector<Tensor>& in) {
          return correlation_patch(in[0], in[1], {4, k});
        },
        [](Rng& rng) {
          return std::vector<Tensor>{Tensor::randn({1, 4, 6, 6}, rng),
                                     Tensor::randn({1, 4, 6, 6}, rng)};
        });
  }
  expect_pass(
      [](const std::vector<Tensor>& in) {
        ConvSpec pre{3, 3, 3, 1, 1, false, in[2], in[3]};
        return correlation_pointwise(in[0], in[1], {3, 0}, pre);
      },
      [](Rng& rng) {
        return std::vector<Tensor>{Tensor::randn({1, 3, 5, 5}, rng),
                                   Tensor::randn({1, 3, 5, 5}, rng),
                                   Tensor::randn({3, 3, 3, 3}, rng), Tensor::randn({3}, rng)};
      });
  expect_pass(
      [](const std::vector<Tensor>& in) { return warp_right_to_left(in[0], in[1]); },
      [](Rng& rng) {
        Tensor disp = Tensor::zeros({1, 1, 4, 8});
        for (auto& v : disp.values()) {
          v = static_cast<double>(rng.index(3)) + rng.uniform(0.1, 0.9);
        }
        return std::vector<Tensor>{Tensor::randn({1, 3, 4, 8}, rng), disp};
      });
  expect_pass(
      [](const std::vector<Tensor>& in) {
        return resample(in[0], 2, ResampleMode::down_average, 0.5);
      },
      [](Rng& rng) { return std::vector<Tensor>{Tensor::randn({1, 2, 6, 6}, rng)}; });
  expect_pass(
      [](const std::vector<Tensor>& in) {
        return resample(in[0], 2, ResampleMode::up_bilinear, 2.0);
      },
      [](Rng& rng) { return std::vector<Tensor>{Tensor::randn({1, 2, 5, 5}, rng)}; });

  // Losses.
  expect_pass([](const std::vector<Tensor>& in) { return smooth_l1(in[0]); },
              [](Rng& rng) { return std::vector<Tensor>{Tensor::randn({3, 4}, rng, 2.0)}; });
  expect_pass(
      [](const std::vector<Tensor>& in) {
        Tensor mask = Tensor::filled(in[0].shape(), 1.0);
        return scale_loss(in[1], in[0], mask);
      },
      [](Rng& rng) {
        return std::vector<Tensor>{Tensor::randn({1, 1, 4, 4}, rng, 2.0),
                                   Tensor::randn({1, 1, 4, 4}, rng, 2.0)};
      });

  // Directional probes at the excluded non-differentiable points.
  {
    Tensor x = Tensor::from_data({1}, {0.0}, true);
    TensorOp leaky = [](const std::vector<Tensor>& in) { return leaky_relu(in[0], 0.1); };
    EXPECT_NEAR(one_sided_fd(leaky, {x}, 0, 0, +1), 1.0, 1e-9);
    EXPECT_NEAR(one_sided_fd(leaky, {x}, 0, 0, -1), 0.1, 1e-9);

    // smooth-L1 kinks: symmetric at 0 (central difference equals the
    // analytic 0); C1 at |x|=1 so both one-sided slopes approach 1.
    TensorOp sl1 = [](const std::vector<Tensor>& in) { return smooth_l1(in[0]); };
    Tensor zero = Tensor::from_data({1}, {0.0}, true);
    GradientReport rep = check_gradient(sl1, {zero}, kEps, kGradTol);
    EXPECT_TRUE(rep.pass);
    Tensor unit = Tensor::from_data({1}, {1.0}, true);
    EXPECT_NEAR(one_sided_fd(sl1, {unit}, 0, 0, +1), 1.0, 1e-5);
    EXPECT_NEAR(one_sided_fd(sl1, {unit}, 0, 0, -1), 1.0, 1e-5);

    // Bilinear warp at an exact integer disparity: the analytic gradient
    // matches the d-decreasing one-sided quotient.
    Rng rng(7);
    Tensor img = Tensor::randn({1, 1, 1, 8}, rng);
    Tensor disp = Tensor::filled({1, 1, 1, 8}, 2.0, true);
    TensorOp warp_op = [&img](const std::vector<Tensor>& in) {
      return warp_right_to_left(img, in[0]);
    };
    sum(warp_op({disp})).backward();
    for (std::int64_t x = 3; x < 7; ++x) {
      EXPECT_NEAR(disp.grad()[x], one_sided_fd(warp_op, {disp}, 0, x, -1), 1e-6);
    }
  }

  // End-to-end: gradient of mean(d_hat[0]) w.r.t. the left image on a
  // (1,3,64,64) instance, random probe coordinates.
  {
    NetworkConfig cfg = tiny_cfg();
    for (int seed = 0; seed < 5; ++seed) {
      Network netc = build_costvol_net(cfg, 300 + seed);
      Network nets = build_refine_net(cfg, 400 + seed);
      // Nonzero refinement heads so the second stage participates.
      Rng hr(500 + seed);
      for (auto& stage : nets.decoder) {
        for (auto& v : stage.head.weight.values()) v = 0.02 * hr.gaussian();
      }
      Rng rng(600 + seed);
      Tensor left = Tensor::rand_uniform({1, 3, 64, 64}, rng);
      Tensor right = Tensor::rand_uniform({1, 3, 64, 64}, rng);
      TensorOp e2e = [&](const std::vector<Tensor>& in) {
        DisparityPyramid pyr = forward_stacked(in[0], right, netc, nets);
        return mean(pyr.d_hat[0]);
      };
      GradientReport rep = check_gradient(e2e, {left}, kEps, kGradTol,
                                          /*max_probes_per_input=*/12, 700 + seed);
      EXPECT_TRUE(rep.pass) << "seed " << seed << " max_rel_err " << rep.max_rel_err
                            << " abs " << rep.max_abs_err;
    }
  }
  pass_line(2, "gradient checks");
}

// ---------------------------------------------------------------------------
// 3. Shape and structure: pyramid extents halve per scale, the residual sum
//    identity holds bit-exactly, zero heads start at the first stage.
TEST(Acceptance, C3_ShapeAndStructure) {
  NetworkConfig cfg = tiny_cfg();
  Network netc = build_costvol_net(cfg, 31);
  Network nets = build_refine_net(cfg, 32);
  Rng rng(33);
  Tensor left = Tensor::rand_uniform({1, 3, 256, 256}, rng);
  Tensor right = Tensor::rand_uniform({1, 3, 256, 256}, rng);
  DisparityPyramid pyr = forward_stacked(left, right, netc, nets);
  ASSERT_EQ(pyr.d_hat.size(), 7u);
  for (std::int64_t s = 0; s < 7; ++s) {
    EXPECT_EQ(pyr.d_hat[static_cast<std::size_t>(s)].shape(),
              Shape({1, 1, 256 >> s, 256 >> s}));
  }
  // Zero-initialised refinement heads: d_hat == c exactly.
  for (std::size_t s = 0; s < 7; ++s) {
    EXPECT_EQ(pyr.d_hat[s].values(), pyr.c[s].values());
    for (double v : pyr.r[s].values()) ASSERT_EQ(v, 0.0);
  }
  // Perturbed heads: the sum identity stays bit-exact.
  Rng hr(34);
  for (auto& stage : nets.decoder) {
    for (auto& v : stage.head.weight.values()) v = 0.05 * hr.gaussian();
  }
  Rng rng2(35);
  Tensor l2 = Tensor::rand_uniform({1, 3, 64, 128}, rng2);
  Tensor r2 = Tensor::rand_uniform({1, 3, 64, 128}, rng2);
  DisparityPyramid pyr2 = forward_stacked(l2, r2, netc, nets);
  for (std::size_t s = 0; s < 7; ++s) {
    for (std::size_t i = 0; i < pyr2.d_hat[s].values().size(); ++i) {
      ASSERT_EQ(pyr2.d_hat[s].values()[i], pyr2.c[s].values()[i] + pyr2.r[s].values()[i]);
    }
  }
  pass_line(3, "pyramid shapes and residual identity");
}

// ---------------------------------------------------------------------------
// 4. Channel scaling law: quadratic-with-floor parameter growth, strictly
//    monotone in each ratio.
TEST(Acceptance, C4_ScalingLaw) {
  const double r1 = static_cast<double>(count_parameters(tiny_cfg(16, 16))) /
                    static_cast<double>(count_parameters(tiny_cfg(8, 8)));
  const double r2 = static_cast<double>(count_parameters(tiny_cfg(8, 8))) /
                    static_cast<double>(count_parameters(tiny_cfg(4, 4)));
  EXPECT_GE(r1, 3.7);
  EXPECT_LT(r1, 4.0);
  EXPECT_GE(r2, 3.7);
  EXPECT_LT(r2, 4.0);
  for (std::int64_t r = 1; r <= 16; r *= 2) {
    EXPECT_LT(count_parameters(tiny_cfg(r, 4)), count_parameters(tiny_cfg(r + 1, 4)));
    EXPECT_LT(count_parameters(tiny_cfg(4, r)), count_parameters(tiny_cfg(4, r + 1)));
  }
  std::printf("  ratio (16,16)/(8,8) = %.4f, (8,8)/(4,4) = %.4f\n", r1, r2);
  pass_line(4, "parameter scaling law");
}

// ---------------------------------------------------------------------------
// 5. Schedule fidelity: the published four-round weight table, verbatim,
//    with boundaries at cumulative epochs 20/40/60/90.
TEST(Acceptance, C5_ScheduleFidelity) {
  LossSchedule s = default_loss_schedule();
  ASSERT_EQ(s.rounds.size(), 4u);
  EXPECT_EQ(s.rounds[0].weights,
            std::vector<double>({0.32, 0.16, 0.08, 0.04, 0.02, 0.01, 0.005}));
  EXPECT_EQ(s.rounds[1].weights, std::vector<double>({0.6, 0.32, 0.08, 0.04, 0.02, 0.01, 0.005}));
  EXPECT_EQ(s.rounds[2].weights,
            std::vector<double>({0.8, 0.16, 0.04, 0.02, 0.01, 0.005, 0.0025}));
  EXPECT_EQ(s.rounds[3].weights, std::vector<double>({1.0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(s.rounds[0].epochs, 20);
  EXPECT_EQ(s.rounds[1].epochs, 20);
  EXPECT_EQ(s.rounds[2].epochs, 20);
  EXPECT_EQ(s.rounds[3].epochs, 30);
  EXPECT_EQ(s.round_boundaries(), std::vector<int>({20, 40, 60, 90}));
  pass_line(5, "loss-weight schedule");
}

// ---------------------------------------------------------------------------
// 6. Desk-scale training regression at a pinned seed: 32 synthetic 64x64
//    pairs, max disparity 8, tiny variant, full four-round schedule.
//    (a) round-boundary test EPE non-increasing, (b) the stacked model ends
//    at or below the first stage alone, (c) final test EPE < 1.0 px.
TEST(Acceptance, C6_TrainingRegression) {
  NetworkConfig cfg = tiny_cfg();
  auto data = generate_synthetic_dataset(100, 32, 64, 64, 8.0, SceneMode::dots);
  TrainOptions opts;
  opts.seed = 2;
  opts.test_set = generate_synthetic_dataset(900, 16, 64, 64, 8.0, SceneMode::dots);

  StackedModel stacked = build_model(cfg, 5);
  TrainingLog log = train(stacked, data, default_loss_schedule(), opts);
  ASSERT_EQ(log.round_boundary_test_epe.size(), 4u);
  std::printf("  round-boundary test EPE:");
  for (double e : log.round_boundary_test_epe) std::printf(" %.4f", e);
  std::printf("\n");
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_LE(log.round_boundary_test_epe[i], log.round_boundary_test_epe[i - 1])
        << "round " << i + 1 << " regressed";
  }

  StackedModel first_stage_only = build_model(cfg, 5, /*with_refinement=*/false);
  TrainingLog alone = train(first_stage_only, data, default_loss_schedule(), opts);
  std::printf("  final test EPE: stacked %.4f, first stage alone %.4f\n", log.final_test_epe(),
              alone.final_test_epe());
  EXPECT_LE(log.final_test_epe(), alone.final_test_epe());
  EXPECT_LT(log.final_test_epe(), 1.0);
  pass_line(6, "training regression");
}

// ---------------------------------------------------------------------------
// 7. Search-range sanity: with true disparities spanning one pixel at the
//    correlation resolution, the well-ranged cost volume trains at least as
//    well as the barely-ranged one under identical seeds.
TEST(Acceptance, C7_SearchRangeSanity) {
  auto data = generate_synthetic_dataset(100, 16, 64, 64, 8.0, SceneMode::dots);
  TrainOptions opts;
  opts.seed = 2;
  opts.test_set = generate_synthetic_dataset(900, 16, 64, 64, 8.0, SceneMode::dots);
  LossSchedule sched = default_loss_schedule();
  const int epochs[4] = {5, 5, 5, 8};
  for (std::size_t i = 0; i < 4; ++i) sched.rounds[i].epochs = epochs[i];

  double final_epe[2] = {0.0, 0.0};
  const std::int64_t ranges[2] = {8, 2};
  for (int i = 0; i < 2; ++i) {
    StackedModel model = build_model(tiny_cfg(1, 1, ranges[i]), 5);
    TrainingLog log = train(model, data, sched, opts);
    final_epe[i] = log.final_test_epe();
  }
  std::printf("  final test EPE: D=8 %.4f vs D=2 %.4f\n", final_epe[0], final_epe[1]);
  EXPECT_LE(final_epe[0], final_epe[1]);
  pass_line(7, "search-range sanity");
}

// ---------------------------------------------------------------------------
// 8. Bench ordering: median forward time non-decreasing across the variant
//    ladder at fixed resolution, and reported parameter counts exact.
TEST(Acceptance, C8_BenchOrdering) {
  const std::pair<std::int64_t, std::int64_t> ladder[4] = {{2, 1}, {4, 4}, {8, 8}, {16, 16}};
  std::vector<BenchReport> reports;
  for (const auto& [e, d] : ladder) {
    NetworkConfig cfg = tiny_cfg(e, d, 8);
    reports.push_back(bench_forward(cfg, std::to_string(e) + "," + std::to_string(d), 64, 64,
                                    /*timed_runs=*/10, /*warmup_runs=*/3, /*seed=*/7));
    EXPECT_EQ(reports.back().parameter_count, count_parameters(cfg));
    EXPECT_EQ(reports.back().timed_runs, 10);
  }
  std::printf("  medians:");
  for (const auto& r : reports) {
    std::printf(" %s=%.4fs", r.config_name.c_str(), r.median_seconds);
  }
  std::printf("\n");
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_GE(reports[i].median_seconds, reports[i - 1].median_seconds)
        << reports[i].config_name << " faster than " << reports[i - 1].config_name;
  }
  pass_line(8, "bench ordering");
}

// ---------------------------------------------------------------------------
// 9. Codec and metric conventions: exact round trips, the 3px/5% outlier
//    rule at its boundaries, zero-exclusion in histograms.
TEST(Acceptance, C9_CodecsAndMetricRules) {
  Rng rng(91);
  // PFM round trip is bitwise on values.
  DisparityMap m = DisparityMap::sized(23, 11);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = static_cast<float>(rng.uniform(0.0, 192.0));
    if (rng.uniform() < 0.1) m.valid[i] = 0;
  }
  DisparityMap pfm_back = pfm_read(pfm_write(m));
  ASSERT_EQ(pfm_back.valid, m.valid);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (m.valid[i]) ASSERT_EQ(pfm_back.values[i], m.values[i]);  // bitwise
  }

  // 16-bit PNG: read-then-write reproduces every stored value.
  PngImage img;
  img.width = 256;
  img.height = 256;
  img.bit_depth = 16;
  img.channels = 1;
  img.samples.resize(65536);
  for (std::size_t i = 0; i < 65536; ++i) img.samples[i] = static_cast<std::uint16_t>(i);
  PngImage back = png_decode(kitti_png_write(kitti_png_read(png_encode(img))));
  EXPECT_EQ(back.samples, img.samples);

  // Outlier rule boundaries (error must exceed both 3 px and 5% of truth).
  auto d1_single = [](float gt, float pred) {
    DisparityMap g = DisparityMap::sized(1, 1);
    DisparityMap p = DisparityMap::sized(1, 1);
    g.values[0] = gt;
    p.values[0] = pred;
    return threshold_metrics(p, g, {}).d1_all;
  };
  EXPECT_EQ(d1_single(100.0f, 103.5f), 0.0);
  EXPECT_EQ(d1_single(100.0f, 105.5f), 1.0);
  EXPECT_EQ(d1_single(40.0f, 44.0f), 1.0);
  EXPECT_EQ(d1_single(1.0f, 3.0f), 0.0);

  // Histograms exclude zero disparities.
  DisparityMap zeros = DisparityMap::sized(8, 8);
  EXPECT_TRUE(disparity_histogram({zeros}, 1.0).empty());
  DisparityMap fives = DisparityMap::sized(3, 3);
  for (auto& v : fives.values) v = 5.0f;
  DisparityHistogram h = disparity_histogram({fives}, 2.0);
  ASSERT_EQ(h.counts.size(), 1u);
  EXPECT_EQ(h.counts.begin()->second, 9);
  pass_line(9, "codecs and metric rules");
}
