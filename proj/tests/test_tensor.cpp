#include <gtest/gtest.h>

#include "fadnet/ops.hpp"
#include "fadnet/parallel.hpp"
#include "fadnet/rng.hpp"
#include "fadnet/tensor.hpp"

using namespace fadnet;

TEST(Tensor, ShapeAndDataInvariant) {
  Tensor t = Tensor::zeros({2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(static_cast<std::int64_t>(t.values().size()), t.numel());
  EXPECT_THROW(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST(Tensor, AddElementwise) {
  Tensor a = Tensor::from_data({2}, {1.0, 2.0});
  Tensor b = Tensor::from_data({2}, {3.0, 4.0});
  Tensor c = add(a, b);
  EXPECT_EQ(c.values(), std::vector<double>({4.0, 6.0}));
}

TEST(Tensor, AddShapeMismatch) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 4});
  EXPECT_THROW(add(a, b), ShapeError);
}

TEST(Tensor, BatchBroadcast) {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({1, 2}, {10, 20});
  Tensor c = add(a, b);
  EXPECT_EQ(c.values(), std::vector<double>({11, 22, 13, 24}));

  // Gradient onto the broadcast side collapses over batch.
  Tensor bg = Tensor::from_data({1, 2}, {10, 20}, true);
  Tensor loss = sum(mul(a, bg));
  loss.backward();
  EXPECT_EQ(bg.grad(), std::vector<double>({4.0, 6.0}));
}

TEST(Tensor, SumReduceZeros) {
  for (const Shape& shape : {Shape{3}, Shape{2, 5}, Shape{1, 2, 3, 4}}) {
    Tensor z = Tensor::zeros(shape);
    EXPECT_EQ(sum(z).values()[0], 0.0);
  }
}

TEST(Tensor, SumOverAxes) {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor s0 = sum(a, {0});
  EXPECT_EQ(s0.shape(), Shape({1, 3}));
  EXPECT_EQ(s0.values(), std::vector<double>({5, 7, 9}));
  Tensor s1 = sum(a, {1});
  EXPECT_EQ(s1.values(), std::vector<double>({6, 15}));
  EXPECT_THROW(sum(a, {2}), AxisError);
  EXPECT_THROW(sum(a, {0, 0}), AxisError);
}

TEST(Tensor, ConcatChannels) {
  Tensor a = Tensor::zeros({1, 3, 8, 8});
  Tensor b = Tensor::zeros({1, 1, 8, 8});
  Tensor c = concat_channels({a, b});
  EXPECT_EQ(c.shape(), Shape({1, 4, 8, 8}));
  Tensor bad = Tensor::zeros({1, 1, 4, 8});
  EXPECT_THROW(concat_channels({a, bad}), ShapeError);
}

TEST(Tensor, SliceAndPadRoundtrip) {
  Rng rng(7);
  Tensor a = Tensor::randn({2, 4, 3, 3}, rng);
  Tensor s = slice(a, 1, 1, 2);
  EXPECT_EQ(s.shape(), Shape({2, 2, 3, 3}));
  EXPECT_EQ(s.at({0, 0, 1, 2}), a.at({0, 1, 1, 2}));

  Tensor p = pad_zero(s, {{0, 0}, {1, 1}, {0, 0}, {0, 0}});
  EXPECT_EQ(p.shape(), Shape({2, 4, 3, 3}));
  EXPECT_EQ(p.at({1, 0, 0, 0}), 0.0);
  EXPECT_EQ(p.at({1, 1, 2, 2}), s.at({1, 0, 2, 2}));
}

TEST(Tensor, Reshape) {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = reshape(a, {3, 2});
  EXPECT_EQ(r.shape(), Shape({3, 2}));
  EXPECT_EQ(r.values(), a.values());
  EXPECT_THROW(reshape(a, {4, 2}), ShapeError);
}

TEST(Backward, SumOfLeavesGivesOnes) {
  Tensor x = Tensor::zeros({2, 2}, true);
  Tensor loss = sum(x);
  loss.backward();
  EXPECT_EQ(x.grad(), std::vector<double>(4, 1.0));
}

TEST(Backward, SumOfLeavesDeepGraph) {
  // Chain of adds should still propagate exactly ones.
  Tensor x = Tensor::zeros({3}, true);
  Tensor t = x;
  for (int i = 0; i < 40; ++i) t = add(t, Tensor::zeros({3}));
  sum(t).backward();
  EXPECT_EQ(x.grad(), std::vector<double>(3, 1.0));
}

TEST(Backward, QuadraticGradient) {
  Tensor x = Tensor::from_data({2}, {1.0, -2.0}, true);
  sum(mul(x, x)).backward();
  EXPECT_EQ(x.grad(), std::vector<double>({2.0, -4.0}));
}

TEST(Backward, MeanAbsGradient) {
  Tensor x = Tensor::from_data({2}, {3.0, -3.0}, true);
  mean(abs(x)).backward();
  EXPECT_EQ(x.grad(), std::vector<double>({0.5, -0.5}));
}

TEST(Backward, NonScalarLossRejected) {
  Tensor x = Tensor::zeros({2, 2}, true);
  EXPECT_THROW(x.backward(), ContractError);
}

TEST(Backward, AccumulatesAcrossCalls) {
  Tensor x = Tensor::from_data({2}, {1.0, 1.0}, true);
  Tensor loss = sum(x);
  loss.backward();
  loss.backward();
  EXPECT_EQ(x.grad(), std::vector<double>({2.0, 2.0}));
  x.zero_grad();
  loss.backward();
  EXPECT_EQ(x.grad(), std::vector<double>({1.0, 1.0}));
}

TEST(Backward, SharedSubexpressionVisitedOnce) {
  // y = x + x: dy/dx = 2, and the node is traversed exactly once.
  Tensor x = Tensor::from_data({1}, {5.0}, true);
  Tensor y = add(x, x);
  sum(y).backward();
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(Backward, NonTrackingLeavesUntouched) {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor c = Tensor::from_data({2}, {3.0, 4.0});
  sum(mul(x, c)).backward();
  EXPECT_EQ(x.grad(), std::vector<double>({3.0, 4.0}));
  EXPECT_FALSE(c.has_grad());
}

TEST(Backward, MaxScalarSubgradient) {
  Tensor x = Tensor::from_data({3}, {-1.0, 0.0, 2.0}, true);
  sum(max_scalar(x, 0.0)).backward();
  EXPECT_EQ(x.grad(), std::vector<double>({0.0, 0.0, 1.0}));
}

TEST(Determinism, WorkerCountDoesNotChangeValues) {
  Rng rng(11);
  Tensor a = Tensor::randn({2, 3, 17, 17}, rng);
  Tensor b = Tensor::randn({2, 3, 17, 17}, rng);
  const int saved = worker_count();
  set_worker_count(1);
  Tensor r1 = mul(a, b);
  set_worker_count(4);
  Tensor r4 = mul(a, b);
  set_worker_count(saved);
  EXPECT_EQ(r1.values(), r4.values());
}

TEST(Determinism, RngReproducible) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.gaussian(), b.gaussian());
  }
}
