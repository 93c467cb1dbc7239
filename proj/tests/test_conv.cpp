#include <gtest/gtest.h>

#include "fadnet/conv.hpp"
#include "fadnet/gradcheck.hpp"
#include "oracles.hpp"

using namespace fadnet;

namespace {

ConvSpec random_conv(std::int64_t in_ch, std::int64_t out_ch, std::int64_t k, std::int64_t s,
                     std::int64_t p, bool transposed, Rng& rng) {
  ConvSpec spec = make_conv(in_ch, out_ch, k, s, p, transposed, rng);
  spec.bias = Tensor::randn({out_ch}, rng, 0.5, true);
  return spec;
}

}  // namespace

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  Tensor in = Tensor::randn({1, 2, 5, 5}, rng);
  ConvSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 2;
  spec.kernel = 1;
  spec.stride = 1;
  spec.padding = 0;
  spec.weight = Tensor::from_data({2, 2, 1, 1}, {1, 0, 0, 1});
  spec.bias = Tensor::zeros({2});
  Tensor out = conv2d(in, spec);
  EXPECT_EQ(out.values(), in.values());
}

TEST(Conv2d, OnesKernelCountsTaps) {
  Tensor in = Tensor::filled({1, 1, 5, 5}, 1.0);
  ConvSpec spec;
  spec.in_channels = 1;
  spec.out_channels = 1;
  spec.kernel = 3;
  spec.stride = 1;
  spec.padding = 1;
  spec.weight = Tensor::filled({1, 1, 3, 3}, 1.0);
  spec.bias = Tensor::zeros({1});
  Tensor out = conv2d(in, spec);
  EXPECT_EQ(out.shape(), Shape({1, 1, 5, 5}));
  EXPECT_EQ(out.at({0, 0, 2, 2}), 9.0);  // interior
  EXPECT_EQ(out.at({0, 0, 0, 0}), 4.0);  // corner
  EXPECT_EQ(out.at({0, 0, 0, 2}), 6.0);  // edge
}

TEST(Conv2d, MatchesNaiveOracle) {
  Rng rng(2);
  for (int inst = 0; inst < 20; ++inst) {
    const std::int64_t k = 1 + 2 * rng.index(2);  // 1 or 3
    const std::int64_t s = 1 + rng.index(2);
    const std::int64_t p = rng.index(2);
    if (6 + 2 * p < k) continue;
    Tensor in = Tensor::randn({1, 2, 6, 6}, rng);
    ConvSpec spec = random_conv(2, 3, k, s, p, false, rng);
    Tensor got = conv2d(in, spec);
    Tensor want = oracle::conv2d(in, spec.weight, spec.bias, s, p);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LT(oracle::max_abs_diff(got, want), 1e-9);
  }
}

TEST(Conv2d, ChannelMismatchRejected) {
  Rng rng(3);
  ConvSpec spec = random_conv(3, 4, 3, 1, 1, false, rng);
  Tensor in = Tensor::zeros({1, 2, 8, 8});
  EXPECT_THROW(conv2d(in, spec), ShapeError);
}

TEST(TransposedConv2d, DoublesExtents) {
  Rng rng(4);
  ConvSpec spec = random_conv(1, 3, 4, 2, 1, true, rng);
  Tensor in = Tensor::randn({1, 1, 4, 4}, rng);
  Tensor out = transposed_conv2d(in, spec);
  EXPECT_EQ(out.shape(), Shape({1, 3, 8, 8}));
}

TEST(TransposedConv2d, ZeroInputGivesBias) {
  Rng rng(5);
  ConvSpec spec = random_conv(2, 3, 4, 2, 1, true, rng);
  Tensor in = Tensor::zeros({1, 2, 3, 5});
  Tensor out = transposed_conv2d(in, spec);
  for (std::int64_t oc = 0; oc < 3; ++oc) {
    for (std::int64_t i = 0; i < 6 * 10; ++i) {
      EXPECT_EQ(out.values()[oc * 60 + i], spec.bias.values()[oc]);
    }
  }
}

TEST(TransposedConv2d, MatchesNaiveOracle) {
  Rng rng(6);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor in = Tensor::randn({1, 2, 5, 4}, rng);
    ConvSpec spec = random_conv(2, 3, 4, 2, 1, true, rng);
    Tensor got = transposed_conv2d(in, spec);
    Tensor want = oracle::transposed_conv2d(in, spec.weight, spec.bias, 2, 1);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LT(oracle::max_abs_diff(got, want), 1e-9);
  }
}

// <conv(x), y> == <x, transposed_conv(y)> with the same weight tensor and
// zero biases.
TEST(TransposedConv2d, AdjointIdentity) {
  Rng rng(7);
  for (int inst = 0; inst < 20; ++inst) {
    const std::int64_t s = 1 + rng.index(2);
    const std::int64_t p = rng.index(2);
    const std::int64_t k = s == 2 ? 4 : 3;
    ConvSpec fwd = make_conv(3, 2, k, s, p, false, rng);
    fwd.bias = Tensor::zeros({2});
    Tensor x = Tensor::randn({2, 3, 8, 8}, rng);
    Tensor cx = conv2d(x, fwd);

    ConvSpec adj;
    adj.in_channels = 2;
    adj.out_channels = 3;
    adj.kernel = k;
    adj.stride = s;
    adj.padding = p;
    adj.transposed = true;
    adj.weight = Tensor::from_data({2, 3, k, k}, fwd.weight.values());
    adj.bias = Tensor::zeros({3});
    Tensor y = Tensor::randn(cx.shape(), rng);
    Tensor ty = transposed_conv2d(y, adj);
    ASSERT_EQ(ty.shape(), x.shape());

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < cx.values().size(); ++i) lhs += cx.values()[i] * y.values()[i];
    for (std::size_t i = 0; i < x.values().size(); ++i) rhs += x.values()[i] * ty.values()[i];
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
}

// The transposed conv equals the input-gradient of the matching forward
// conv applied to the same tensor.
TEST(TransposedConv2d, EqualsConvInputGradient) {
  Rng rng(8);
  ConvSpec fwd = make_conv(3, 2, 4, 2, 1, false, rng);
  fwd.bias = Tensor::zeros({2});
  Tensor x = Tensor::zeros({1, 3, 8, 8}, true);
  Tensor cx = conv2d(x, fwd);
  Tensor g = Tensor::randn(cx.shape(), rng);
  sum(mul(cx, g)).backward();

  ConvSpec adj;
  adj.in_channels = 2;
  adj.out_channels = 3;
  adj.kernel = 4;
  adj.stride = 2;
  adj.padding = 1;
  adj.transposed = true;
  adj.weight = Tensor::from_data({2, 3, 4, 4}, fwd.weight.values());
  adj.bias = Tensor::zeros({3});
  Tensor want = transposed_conv2d(g, adj);
  for (std::size_t i = 0; i < want.values().size(); ++i) {
    EXPECT_NEAR(x.grad()[i], want.values()[i], 1e-12);
  }
}

TEST(LeakyRelu, Definition) {
  Tensor x = Tensor::from_data({2}, {2.0, -2.0});
  EXPECT_EQ(leaky_relu(x, 0.1).values(), std::vector<double>({2.0, -0.2}));
  // Slope zero degenerates to the plain rectifier.
  EXPECT_EQ(leaky_relu(x, 0.0).values(), std::vector<double>({2.0, 0.0}));
}

TEST(LeakyRelu, GradientOnNegativeSide) {
  Tensor x = Tensor::from_data({1}, {-3.0}, true);
  sum(leaky_relu(x, 0.1)).backward();
  EXPECT_EQ(x.grad()[0], 0.1);
}
