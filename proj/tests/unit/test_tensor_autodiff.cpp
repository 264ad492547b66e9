#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsinoise/gradcheck.hpp"
#include "hsinoise/gradient_suite.hpp"
#include "hsinoise/ops.hpp"
#include "hsinoise/tape.hpp"

namespace hsinoise {
namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 0.0) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << "index " << i;
}

TEST(TensorTest, ConstructsConstants) {
  const Tensor eye = tensor({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(eye.shape(), (Shape{2, 2}));
  EXPECT_FALSE(eye.tracked());
  EXPECT_FALSE(eye.grad_id().has_value());
  expect_values(tensor({3}, {0, 0, 0}), {0, 0, 0});
  EXPECT_EQ(tensor({2}, {1, 2}).to_vector(), (std::vector<double>{1, 2}));
}

TEST(TensorTest, RejectsLengthMismatchAndEmptyExtents) {
  EXPECT_THROW(tensor({2, 2}, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(tensor({0}, {}), std::invalid_argument);
  EXPECT_THROW(Tensor::zeros({}), std::invalid_argument);
}

TEST(TensorTest, ItemRequiresSingleElement) {
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(tensor({2}, {1, 2}).item(), std::logic_error);
}

TEST(MatmulTest, ForwardValues) {
  const Tensor eye = tensor({2, 2}, {1, 0, 0, 1});
  expect_values(matmul(eye, tensor({2, 1}, {3, 4})), {3, 4});
  const Tensor c = matmul(tensor({1, 2}, {1, 2}), tensor({2, 1}, {3, 4}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c.item(), 11.0);
  EXPECT_THROW(matmul(tensor({1, 2}, {1, 2}), tensor({3, 1}, {1, 2, 3})), std::invalid_argument);
}

TEST(MatmulTest, BackwardRuleMatchesTransposedProducts) {
  const Tensor a = tensor({2, 3}, random_values(6, 1));
  const Tensor b = tensor({3, 2}, random_values(6, 2));
  const Tensor dc = tensor({2, 2}, random_values(4, 3));
  Tape tape;
  const Tensor av = tape.variable(a), bv = tape.variable(b);
  const Gradients g = tape.backward(sum(mul(matmul(av, bv), dc)));
  // dA = dC * B^T, dB = A^T * dC computed by index loops.
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < 2; ++j) s += dc[i * 2 + j] * b[k * 2 + j];
      EXPECT_NEAR(g.of(av)[i * 3 + k], s, 1e-15);
    }
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < 2; ++i) s += a[i * 3 + k] * dc[i * 2 + j];
      EXPECT_NEAR(g.of(bv)[k * 2 + j], s, 1e-15);
    }
}

TEST(MatmulTest, SumGradientMatchesFiniteDifferences) {
  const Tensor a = tensor({3, 4}, random_values(12, 4));
  const Tensor b = tensor({4, 2}, random_values(8, 5));
  Tape tape;
  const Tensor av = tape.variable(a);
  const Tensor analytic = tape.backward(sum(matmul(av, b))).of(av);
  const Tensor numeric = finite_diff_grad([&](const Tensor& x) { return sum(matmul(x, b)).item(); }, a);
  EXPECT_LE(gradient_relative_error(analytic, numeric), 1e-6);
}

TEST(Conv3dTest, IdentityAndZeroKernels) {
  const Tensor input = tensor({1, 2, 3, 4}, random_values(24, 6));
  expect_values(conv3d(input, Tensor::ones({1, 1, 1, 1, 1})), input.to_vector());
  const Tensor zero = conv3d(input, Tensor::zeros({2, 1, 2, 2, 2}));
  EXPECT_EQ(zero.shape(), (Shape{2, 1, 2, 3}));
  expect_values(zero, std::vector<double>(12, 0.0));
}

TEST(Conv3dTest, OutputExtentsFollowStride) {
  const Tensor out = conv3d(Tensor::ones({2, 7, 5, 6}), Tensor::ones({3, 2, 3, 2, 2}), 2);
  EXPECT_EQ(out.shape(), (Shape{3, 3, 2, 3}));
  // Every window of ones sums to C * d * h * w.
  EXPECT_EQ(out[0], 2.0 * 3 * 2 * 2);
}

TEST(Conv3dTest, MatchesDirectCorrelation) {
  const Tensor input = tensor({2, 3, 3, 3}, random_values(54, 7));
  const Tensor kernels = tensor({1, 2, 2, 2, 2}, random_values(16, 8));
  const Tensor out = conv3d(input, kernels);
  auto in = [&](std::size_t c, std::size_t z, std::size_t y, std::size_t x) { return input[((c * 3 + z) * 3 + y) * 3 + x]; };
  auto ker = [&](std::size_t c, std::size_t z, std::size_t y, std::size_t x) {
    return kernels[((c * 2 + z) * 2 + y) * 2 + x];
  };
  for (std::size_t oz = 0; oz < 2; ++oz)
    for (std::size_t oy = 0; oy < 2; ++oy)
      for (std::size_t ox = 0; ox < 2; ++ox) {
        double s = 0;
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t z = 0; z < 2; ++z)
            for (std::size_t y = 0; y < 2; ++y)
              for (std::size_t x = 0; x < 2; ++x) s += in(c, oz + z, oy + y, ox + x) * ker(c, z, y, x);
        EXPECT_NEAR(out[(oz * 2 + oy) * 2 + ox], s, 1e-14);
      }
}

TEST(Conv3dTest, GradientsMatchFiniteDifferences) {
  const Tensor input = tensor({1, 4, 4, 4}, random_values(64, 9));
  const Tensor kernels = tensor({2, 1, 2, 2, 2}, random_values(16, 10));
  Tape tape;
  const Tensor iv = tape.variable(input), kv = tape.variable(kernels);
  const Gradients g = tape.backward(sum(conv3d(iv, kv)));
  const Tensor di = finite_diff_grad([&](const Tensor& x) { return sum(conv3d(x, kernels)).item(); }, input);
  const Tensor dk = finite_diff_grad([&](const Tensor& k) { return sum(conv3d(input, k)).item(); }, kernels);
  EXPECT_LE(gradient_relative_error(g.of(iv), di), 1e-5);
  EXPECT_LE(gradient_relative_error(g.of(kv), dk), 1e-5);
}

TEST(Conv3dTest, RejectsOversizedKernelAndBadStride) {
  EXPECT_THROW(conv3d(Tensor::ones({1, 2, 2, 2}), Tensor::ones({1, 1, 3, 1, 1})), std::invalid_argument);
  EXPECT_THROW(conv3d(Tensor::ones({1, 2, 2, 2}), Tensor::ones({1, 2, 1, 1, 1})), std::invalid_argument);
  EXPECT_THROW(conv3d(Tensor::ones({1, 2, 2, 2}), Tensor::ones({1, 1, 1, 1, 1}), 0), std::invalid_argument);
}

TEST(ElementwiseTest, ForwardValues) {
  const Tensor x = tensor({3}, {1.5, -2, 7});
  expect_values(sub(x, Tensor::zeros({3})), x.to_vector());
  expect_values(relu(tensor({3}, {-1, 0, 2})), {0, 0, 2});
  expect_values(add(tensor({2}, {1, 2}), tensor({2}, {3, 4})), {4, 6});
  expect_values(mul(tensor({2}, {2, 3}), tensor({2}, {4, 5})), {8, 15});
  expect_values(scale(x, 2.0), {3, -4, 14});
  expect_values(scale(x, Tensor::scalar(-1.0)), {-1.5, 2, -7});
  expect_values(divide(x, Tensor::scalar(2.0)), {0.75, -1, 3.5});
  expect_values(add_channel_bias(Tensor::zeros({2, 2}), tensor({2}, {1, -1})), {1, 1, -1, -1});
  EXPECT_THROW(add(tensor({2}, {1, 2}), tensor({3}, {1, 2, 3})), std::invalid_argument);
  EXPECT_THROW(scale(x, tensor({2}, {1, 2})), std::invalid_argument);
  EXPECT_THROW(reshape(x, {2, 2}), std::invalid_argument);
}

TEST(ElementwiseTest, ReluSubgradientIsZeroAtZero) {
  Tape tape;
  const Tensor x = tape.variable(tensor({3}, {-1, 0, 2}));
  expect_values(tape.backward(sum(relu(x))).of(x), {0, 0, 1});
}

TEST(ReductionTest, ForwardValues) {
  EXPECT_EQ(l2_norm(tensor({2}, {3, 4})).item(), 5.0);
  EXPECT_EQ(dot(tensor({3}, {1, 2, 3}), Tensor::zeros({3})).item(), 0.0);
  EXPECT_EQ(sum(Tensor::ones({5})).item(), 5.0);
  EXPECT_EQ(mean(tensor({4}, {1, 2, 3, 6})).item(), 3.0);
  EXPECT_THROW(dot(Tensor::ones({2}), Tensor::ones({3})), std::invalid_argument);
}

TEST(ReductionTest, NormGradient) {
  Tape tape;
  const Tensor x = tape.variable(tensor({2}, {3, 4}));
  expect_values(tape.backward(l2_norm(x)).of(x), {0.6, 0.8}, 1e-15);

  Tape zero_tape;
  const Tensor z = zero_tape.variable(Tensor::zeros({3}));
  const Tensor n = l2_norm(z);
  EXPECT_EQ(n.item(), 0.0);
  expect_values(zero_tape.backward(n).of(z), {0, 0, 0});
}

TEST(CrossEntropyTest, ForwardValues) {
  EXPECT_NEAR(softmax_cross_entropy(Tensor::zeros({4}), 2).item(), std::log(4.0), 1e-15);
  EXPECT_NEAR(softmax_cross_entropy(tensor({2}, {50, -50}), 0).item(), 0.0, 1e-40);
  // -log(e^3 / (e + e^2 + e^3))
  const double expected = -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  EXPECT_NEAR(softmax_cross_entropy(tensor({3}, {1, 2, 3}), 2).item(), expected, 1e-15);
  EXPECT_NEAR(expected, 0.4076, 1e-4);
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(tensor({2}, {1000, -1000}), 1).item()));
  EXPECT_THROW(softmax_cross_entropy(Tensor::zeros({3}), 3), std::invalid_argument);
}

TEST(CrossEntropyTest, GradientIsSoftmaxMinusOneHot) {
  const std::vector<double> z{0.5, -1, 2};
  Tape tape;
  const Tensor x = tape.variable(tensor({3}, z));
  const Tensor g = tape.backward(softmax_cross_entropy(x, 1)).of(x);
  const double norm = std::exp(0.5) + std::exp(-1.0) + std::exp(2.0);
  expect_values(g, {std::exp(0.5) / norm, std::exp(-1.0) / norm - 1.0, std::exp(2.0) / norm}, 1e-15);
}

TEST(BackwardTest, LinearAndQuadraticRules) {
  Tape tape;
  const Tensor x = tape.variable(tensor({2, 2}, {1, -2, 3, 0.5}));
  expect_values(tape.backward(sum(x)).of(x), {1, 1, 1, 1});
  const Tensor v = tape.variable(tensor({3}, {1, -2, 3}));
  expect_values(tape.backward(dot(v, v)).of(v), {2, -4, 6});
}

TEST(BackwardTest, UnreachedLeafGetsZeroGradient) {
  Tape tape;
  const Tensor x = tape.variable(tensor({2}, {1, 2}));
  const Tensor y = tape.variable(tensor({2}, {3, 4}));
  expect_values(tape.backward(sum(x)).of(y), {0, 0});
}

TEST(BackwardTest, RejectsBadLosses) {
  Tape tape, other;
  const Tensor x = tape.variable(tensor({2}, {1, 2}));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
  EXPECT_THROW(tape.backward(Tensor::scalar(1.0)), std::invalid_argument);
  const Tensor y = other.variable(tensor({2}, {1, 2}));
  EXPECT_THROW(tape.backward(sum(y)), std::invalid_argument);
  EXPECT_THROW(add(x, y), std::invalid_argument);
  EXPECT_THROW(tape.backward(sum(x)).of(y), std::invalid_argument);
}

TEST(BackwardTest, DeterministicAcrossRuns) {
  Tape tape;
  const Tensor x = tape.variable(tensor({1, 3, 3, 3}, random_values(27, 11)));
  const Tensor k = tape.variable(tensor({2, 1, 2, 2, 2}, random_values(16, 12)));
  const Tensor loss = l2_norm(relu(conv3d(x, k)));
  const Gradients a = tape.backward(loss), b = tape.backward(loss);
  EXPECT_EQ(a.of(x).to_vector(), b.of(x).to_vector());
  EXPECT_EQ(a.of(k).to_vector(), b.of(k).to_vector());
}

TEST(BackwardTest, OneTapeEqualsChainRuleOfSeparateTapes) {
  const Tensor a = tensor({4, 3}, random_values(12, 13));
  const Tensor x0 = tensor({3, 1}, random_values(3, 14));
  auto g = [&](const Tensor& x) { return matmul(a, x); };
  auto f = [](const Tensor& y) { return add(l2_norm(relu(y)), softmax_cross_entropy(reshape(y, {4}), 1)); };

  Tape whole;
  const Tensor xw = whole.variable(x0);
  const Tensor direct = whole.backward(f(g(xw))).of(xw);

  Tape outer;
  const Tensor y = outer.variable(g(x0));
  const Tensor dy = outer.backward(f(y)).of(y);
  Tape inner;
  const Tensor xi = inner.variable(x0);
  const Tensor chained = inner.backward(sum(mul(g(xi), dy))).of(xi);

  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(direct[i], chained[i], 1e-12);
}

TEST(BackwardTest, OpsDoNotMutateInputs) {
  const std::vector<double> xv = random_values(27, 15), kv = random_values(16, 16);
  const Tensor x = tensor({1, 3, 3, 3}, xv), k = tensor({2, 1, 2, 2, 2}, kv);
  Tape tape;
  const Tensor xt = tape.variable(x), kt = tape.variable(k);
  tape.backward(sum(mul(conv3d(xt, kt), conv3d(xt, kt))));
  EXPECT_EQ(x.to_vector(), xv);
  EXPECT_EQ(k.to_vector(), kv);
  EXPECT_EQ(xt.to_vector(), xv);
}

TEST(FiniteDiffTest, HandDerivatives) {
  expect_values(finite_diff_grad([](const Tensor& x) { return sum(x).item(); }, tensor({3}, {1, 5, -2})), {1, 1, 1},
                1e-9);
  const Tensor sq = finite_diff_grad([](const Tensor& x) { return x[0] * x[0]; }, Tensor::scalar(3.0), 1e-4);
  EXPECT_NEAR(sq.item(), 6.0, 1e-6);
  expect_values(finite_diff_grad([](const Tensor& x) { return l2_norm(x).item(); }, tensor({2}, {3, 4})),
                {0.6, 0.8}, 1e-9);
}

TEST(GradientSuiteTest, EveryPrimitiveMatchesFiniteDifferences) {
  const SuiteResult r = check_primitive_gradients(77, 100);
  EXPECT_EQ(r.cases, 100u);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(GradientSuiteTest, ComposedGraphMatchesFiniteDifferences) {
  const SuiteResult r = check_composed_gradient(78);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}

}  // namespace
}  // namespace hsinoise
