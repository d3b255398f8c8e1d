#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "jcnp/gradcheck.hpp"
#include "jcnp/ops.hpp"
#include "test_util.hpp"

using namespace jcnp;
using jcnp::testing::random_away_from_zero;
using jcnp::testing::random_tensor;

namespace {

Tensor<double> delta_kernel(std::size_t cout, std::size_t cin) {
    auto w = Tensor<double>::zeros({cout, cin, 3, 3});
    for (std::size_t o = 0; o < std::min(cout, cin); ++o) w.data()[(o * cin + o) * 9 + 4] = 1.0;
    return w;
}

}  // namespace

TEST(Conv2d, DeltaKernelIsIdentity) {
    Tape<double> tape(false);
    auto x = Tensor<double>::from({1, 1, 1, 1}, {5.0});
    auto y = conv2d(tape, x, delta_kernel(1, 1), Tensor<double>::zeros({1}));
    EXPECT_EQ(y.item(), 5.0);
}

TEST(Conv2d, AllOnesCountsInBoundsTaps) {
    Tape<double> tape(false);
    auto x = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    auto y = conv2d(tape, x, Tensor<double>::full({1, 1, 3, 3}, 1.0), Tensor<double>::zeros({1}));
    const std::vector<double> expected{4, 6, 4, 6, 9, 6, 4, 6, 4};
    EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), expected);
}

TEST(Conv2d, ZeroKernelYieldsBias) {
    Tape<double> tape(false);
    auto x = random_tensor<double>({2, 3, 5, 4}, 1);
    auto y = conv2d(tape, x, Tensor<double>::zeros({2, 3, 3, 3}), Tensor<double>::from({2}, {1.5, -2.0}));
    ASSERT_EQ(y.shape(), (Shape{2, 2, 5, 4}));
    for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_EQ(y.data()[i], i / 20 % 2 == 0 ? 1.5 : -2.0);
}

TEST(Conv2d, MatchesDirectLoops) {
    Tape<double> tape(false);
    for (std::size_t batch : {1, 3}) {
        auto x = random_tensor<double>({batch, 4, 6, 7}, 10 + batch);
        auto w = random_tensor<double>({5, 4, 3, 3}, 20 + batch);
        auto b = random_tensor<double>({5}, 30 + batch);
        auto y = conv2d(tape, x, w, b);
        const auto ref = jcnp::testing::reference_conv(x, w, b);
        ASSERT_EQ(y.numel(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-12);
    }
}

// Network-sized operands reach the large-matrix paths of the gemm backend.
TEST(Conv2d, MatchesDirectLoopsAtNetworkWidths) {
    auto x = random_tensor<double>({2, 64, 16, 16}, 70);
    auto w = random_tensor<double>({64, 64, 3, 3}, 71);
    auto b = random_tensor<double>({64}, 72);
    const auto ref = jcnp::testing::reference_conv(x, w, b);
    {
        Tape<double> tape(false);
        auto y = conv2d(tape, x, w, b);
        for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-10) << i;
    }
    auto to_float = [](const Tensor<double>& t) {
        return Tensor<float>::from(t.shape(), std::vector<float>(t.data().begin(), t.data().end()));
    };
    Tape<float> tape(false);
    auto y = conv2d(tape, to_float(x), to_float(w), to_float(b));
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-3) << i;
}

TEST(Deconv2d, MatchesDirectScatterAtNetworkWidths) {
    auto x = random_tensor<double>({2, 64, 16, 16}, 73);
    auto w = random_tensor<double>({64, 64, 3, 3}, 74);
    auto b = random_tensor<double>({64}, 75);
    const auto ref = jcnp::testing::reference_deconv(x, w, b);
    Tape<double> tape(false);
    auto y = deconv2d(tape, x, w, b);
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-10) << i;
}

TEST(GradCheck, Conv2dAtNetworkWidth) {
    auto x = random_tensor<double>({1, 64, 16, 16}, 76, -1, 1, true);
    auto w = random_tensor<double>({32, 64, 3, 3}, 77, -1, 1, true);
    auto b = random_tensor<double>({32}, 78, -1, 1, true);
    const ScalarFunction<double> f = [&](Tape<double>& t) { return sum(t, conv2d(t, x, w, b)); };
    GradCheckOptions opts;
    opts.max_coords = 40;
    EXPECT_LT(finite_diff_check(f, x, opts), 1e-4);
    EXPECT_LT(finite_diff_check(f, w, opts), 1e-4);
}

TEST(Conv2d, ChannelMismatchThrows) {
    Tape<double> tape(false);
    auto x = Tensor<double>::zeros({1, 2, 4, 4});
    EXPECT_THROW(conv2d(tape, x, Tensor<double>::zeros({3, 1, 3, 3}), Tensor<double>::zeros({3})),
                 DimensionError);
    EXPECT_THROW(conv2d(tape, x, Tensor<double>::zeros({3, 2, 5, 5}), Tensor<double>::zeros({3})),
                 DimensionError);
}

TEST(Prelu, Definition) {
    Tape<double> tape(false);
    auto y = prelu(tape, Tensor<double>::from({1, 1, 1, 2}, {2, -2}), Tensor<double>::from({1}, {0.25}));
    EXPECT_EQ(y.data()[0], 2.0);
    EXPECT_EQ(y.data()[1], -0.5);

    auto relu = prelu(tape, Tensor<double>::from({1, 1, 1, 2}, {-3, 4}), Tensor<double>::from({1}, {0.0}));
    EXPECT_EQ(relu.data()[0], 0.0);
    EXPECT_EQ(relu.data()[1], 4.0);

    auto x = random_tensor<double>({2, 3, 4, 4}, 7);
    auto ident = prelu(tape, x, Tensor<double>::full({3}, 1.0));
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(ident.data()[i], x.data()[i]);
}

TEST(Prelu, SlopeCountMismatchThrows) {
    Tape<double> tape(false);
    EXPECT_THROW(prelu(tape, Tensor<double>::zeros({1, 3, 2, 2}), Tensor<double>::zeros({2})),
                 DimensionError);
}

TEST(MaxPool2, Windows) {
    Tape<double> tape(false);
    auto single = maxpool2(tape, Tensor<double>::from({1, 1, 2, 2}, {1, 2, 3, 4}));
    EXPECT_EQ(single.item(), 4.0);

    std::vector<double> ramp(16);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    auto y = maxpool2(tape, Tensor<double>::from({1, 1, 4, 4}, ramp));
    EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{5, 7, 13, 15}));

    auto c = maxpool2(tape, Tensor<double>::full({2, 2, 6, 8}, 0.3));
    ASSERT_EQ(c.shape(), (Shape{2, 2, 3, 4}));
    for (double v : c.data()) EXPECT_EQ(v, 0.3);
}

TEST(MaxPool2, OddDimsThrow) {
    Tape<double> tape(false);
    EXPECT_THROW(maxpool2(tape, Tensor<double>::zeros({1, 1, 3, 4})), DimensionError);
}

TEST(MaxPool2, TieRoutesGradientToFirstElement) {
    Tape<double> tape;
    auto x = Tensor<double>::from({1, 1, 2, 2}, {7, 7, 7, 7}, true);
    tape.backward(sum(tape, maxpool2(tape, x)));
    EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Deconv2d, SingleInputLandsInsideCrop) {
    Tape<double> tape(false);
    auto x = Tensor<double>::from({1, 1, 1, 1}, {1.0});
    auto ones = deconv2d(tape, x, Tensor<double>::full({1, 1, 3, 3}, 1.0), Tensor<double>::zeros({1}));
    EXPECT_EQ(std::vector<double>(ones.data().begin(), ones.data().end()), (std::vector<double>{1, 1, 1, 1}));

    // Taps 1..9 in row-major order: only (1,1),(1,2),(2,1),(2,2) survive the crop.
    std::vector<double> taps(9);
    std::iota(taps.begin(), taps.end(), 1.0);
    auto y = deconv2d(tape, x, Tensor<double>::from({1, 1, 3, 3}, taps), Tensor<double>::zeros({1}));
    EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{5, 6, 8, 9}));
}

TEST(Deconv2d, ZeroKernelYieldsBiasAtDoubleSize) {
    Tape<double> tape(false);
    auto y = deconv2d(tape, random_tensor<double>({1, 2, 3, 5}, 3), Tensor<double>::zeros({2, 2, 3, 3}),
                      Tensor<double>::from({2}, {0.5, 0.5}));
    ASSERT_EQ(y.shape(), (Shape{1, 2, 6, 10}));
    for (double v : y.data()) EXPECT_EQ(v, 0.5);
}

TEST(Deconv2d, ShapeContract) {
    Tape<float> tape(false);
    auto y = deconv2d(tape, Tensor<float>::zeros({1, 64, 16, 16}), Tensor<float>::zeros({64, 64, 3, 3}),
                      Tensor<float>::zeros({64}));
    EXPECT_EQ(y.shape(), (Shape{1, 64, 32, 32}));
}

TEST(Deconv2d, MatchesDirectScatter) {
    Tape<double> tape(false);
    for (std::size_t batch : {1, 2}) {
        auto x = random_tensor<double>({batch, 3, 4, 5}, 40 + batch);
        auto w = random_tensor<double>({3, 2, 3, 3}, 50 + batch);
        auto b = random_tensor<double>({2}, 60 + batch);
        auto y = deconv2d(tape, x, w, b);
        const auto ref = jcnp::testing::reference_deconv(x, w, b);
        ASSERT_EQ(y.numel(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-12);
    }
}

TEST(Deconv2d, ChannelMismatchThrows) {
    Tape<double> tape(false);
    EXPECT_THROW(deconv2d(tape, Tensor<double>::zeros({1, 3, 2, 2}), Tensor<double>::zeros({2, 2, 3, 3}),
                          Tensor<double>::zeros({2})),
                 DimensionError);
}

TEST(Shapes, PoolThenDeconvRestoresSpatialDims) {
    Tape<double> tape(false);
    auto x = random_tensor<double>({2, 4, 12, 8}, 5);
    auto same = conv2d(tape, x, Tensor<double>::zeros({4, 4, 3, 3}), Tensor<double>::zeros({4}));
    EXPECT_EQ(same.shape(), x.shape());
    auto up = deconv2d(tape, maxpool2(tape, x), Tensor<double>::zeros({4, 4, 3, 3}), Tensor<double>::zeros({4}));
    EXPECT_EQ(up.shape(), x.shape());
}

TEST(Concat, ChannelCountsAndRoundTrip) {
    Tape<float> tape(false);
    auto a64 = Tensor<float>::zeros({1, 64, 4, 4});
    EXPECT_EQ(concat_channels(tape, a64, a64).dim(1), 128u);

    auto a = random_tensor<double>({2, 1, 3, 3}, 11);
    auto b = random_tensor<double>({2, 1, 3, 3}, 12);
    Tape<double> t(false);
    auto ab = concat_channels(t, a, b);
    EXPECT_EQ(ab.dim(1), 2u);
    auto a2 = slice_channels(t, ab, 0, 1);
    auto b2 = slice_channels(t, ab, 1, 2);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), a2.data().begin()));
    EXPECT_TRUE(std::equal(b.data().begin(), b.data().end(), b2.data().begin()));
}

TEST(Concat, SpatialMismatchThrows) {
    Tape<double> tape(false);
    EXPECT_THROW(concat_channels(tape, Tensor<double>::zeros({1, 1, 4, 4}), Tensor<double>::zeros({1, 1, 4, 5})),
                 DimensionError);
}

TEST(Add, Elementwise) {
    Tape<double> tape(false);
    auto y = add(tape, Tensor<double>::from({2}, {1, 2}), Tensor<double>::from({2}, {3, 4}));
    EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{4, 6}));
    auto a = random_tensor<double>({3, 4}, 2);
    auto z = add(tape, a, Tensor<double>::zeros({3, 4}));
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), z.data().begin()));
    EXPECT_THROW(add(tape, Tensor<double>::zeros({2}), Tensor<double>::zeros({3})), DimensionError);
}

TEST(Add, GradientIsUpstreamForBothOperands) {
    Tape<double> tape;
    auto a = Tensor<double>::from({2}, {1, 2}, true);
    auto b = Tensor<double>::from({2}, {3, 4}, true);
    auto s = sum(tape, add(tape, a, b));
    tape.backward(s);
    for (double g : a.grad()) EXPECT_EQ(g, 1.0);
    for (double g : b.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Mse, ValuesAndErrors) {
    Tape<double> tape(false);
    auto p = random_tensor<double>({1, 1, 4, 4}, 9);
    EXPECT_EQ(mse_loss(tape, p, p).item(), 0.0);
    EXPECT_EQ(mse_loss(tape, Tensor<double>::from({2}, {1, 1}), Tensor<double>::from({2}, {0, 2})).item(), 1.0);
    EXPECT_THROW(mse_loss(tape, Tensor<double>::zeros({2}), Tensor<double>::zeros({1, 2})), DimensionError);
}

TEST(Mse, GradientIsTwiceResidualOverN) {
    Tape<double> tape;
    auto p = random_tensor<double>({1, 1, 3, 3}, 13, -1, 1, true);
    auto g = random_tensor<double>({1, 1, 3, 3}, 14);
    tape.backward(mse_loss(tape, p, g));
    for (std::size_t i = 0; i < p.numel(); ++i) {
        EXPECT_NEAR(p.grad()[i], 2.0 * (p.data()[i] - g.data()[i]) / 9.0, 1e-15);
    }
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
    auto x = random_tensor<float>({2, 3, 8, 8}, 1);
    auto w = random_tensor<float>({3, 3, 3, 3}, 2);
    auto b = random_tensor<float>({3}, 3);
    Tape<float> t1(false), t2(false);
    auto y1 = deconv2d(t1, maxpool2(t1, conv2d(t1, x, w, b)), w, b);
    auto y2 = deconv2d(t2, maxpool2(t2, conv2d(t2, x, w, b)), w, b);
    EXPECT_TRUE(std::equal(y1.data().begin(), y1.data().end(), y2.data().begin()));
}

// Gradient checks in double precision, eps = 1e-4, tolerance 1e-4.

namespace {

constexpr double kOpTolerance = 1e-4;

// Weighted sum so that every output coordinate carries a distinct upstream gradient.
Tensor<double> weighted_sum(Tape<double>& tape, const Tensor<double>& y, std::uint64_t seed) {
    auto weights = random_tensor<double>(y.shape(), seed, 0.5, 1.5);
    auto zero = Tensor<double>::zeros(y.shape());
    // mse(y + w, 0) is a smooth, non-degenerate scalar of y.
    return mse_loss(tape, add(tape, y, weights), zero);
}

}  // namespace

TEST(GradCheck, Conv2dAllOperands) {
    auto x = random_tensor<double>({2, 3, 5, 4}, 1, -1, 1, true);
    auto w = random_tensor<double>({2, 3, 3, 3}, 2, -1, 1, true);
    auto b = random_tensor<double>({2}, 3, -1, 1, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, conv2d(t, x, w, b), 4); };
    EXPECT_LT(finite_diff_check(f, x), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, w), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, b), kOpTolerance);
}

TEST(GradCheck, PreluAllOperands) {
    auto x = random_away_from_zero<double>({2, 3, 4, 4}, 5, true);
    auto a = Tensor<double>::from({3}, {0.25, -0.1, 0.6}, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, prelu(t, x, a), 6); };
    EXPECT_LT(finite_diff_check(f, x), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, a), kOpTolerance);
}

TEST(GradCheck, MaxPool) {
    // Distinct values spaced far beyond eps so no window has a near-tie.
    std::vector<double> values(2 * 2 * 4 * 6);
    std::iota(values.begin(), values.end(), 0.0);
    std::mt19937_64 rng(8);
    std::shuffle(values.begin(), values.end(), rng);
    for (auto& v : values) v *= 0.05;
    auto x = Tensor<double>::from({2, 2, 4, 6}, values, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, maxpool2(t, x), 9); };
    EXPECT_LT(finite_diff_check(f, x), kOpTolerance);
}

TEST(GradCheck, Deconv2dAllOperands) {
    auto x = random_tensor<double>({2, 3, 3, 4}, 10, -1, 1, true);
    auto w = random_tensor<double>({3, 2, 3, 3}, 11, -1, 1, true);
    auto b = random_tensor<double>({2}, 12, -1, 1, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, deconv2d(t, x, w, b), 13); };
    EXPECT_LT(finite_diff_check(f, x), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, w), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, b), kOpTolerance);
}

TEST(GradCheck, ConcatSliceAdd) {
    auto a = random_tensor<double>({2, 2, 3, 3}, 14, -1, 1, true);
    auto b = random_tensor<double>({2, 1, 3, 3}, 15, -1, 1, true);
    ScalarFunction<double> f = [&](Tape<double>& t) {
        auto ab = concat_channels(t, a, b);
        auto mixed = add(t, slice_channels(t, ab, 1, 3), slice_channels(t, ab, 0, 2));
        return weighted_sum(t, mixed, 16);
    };
    EXPECT_LT(finite_diff_check(f, a), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, b), kOpTolerance);
}

TEST(GradCheck, MseAgainstFiniteDifferences) {
    auto p = random_tensor<double>({1, 2, 3, 3}, 17, -1, 1, true);
    auto g = random_tensor<double>({1, 2, 3, 3}, 18);
    ScalarFunction<double> f = [&](Tape<double>& t) { return mse_loss(t, p, g); };
    EXPECT_LT(finite_diff_check(f, p), kOpTolerance);
}

TEST(GradCheck, ConvPreluCompositeOnPositiveInputs) {
    auto x = random_tensor<double>({1, 2, 6, 6}, 19, 0.1, 1.0, true);
    auto w = random_tensor<double>({3, 2, 3, 3}, 20, -1, 1, true);
    auto b = random_tensor<double>({3}, 21, -0.1, 0.1, true);
    auto a = Tensor<double>::full({3}, 0.25, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, prelu(t, conv2d(t, x, w, b), a), 22); };
    EXPECT_LT(finite_diff_check(f, x), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, w), kOpTolerance);
    EXPECT_LT(finite_diff_check(f, a), kOpTolerance);
}

TEST(GradCheck, QuadraticIsTight) {
    auto x = random_tensor<double>({5}, 23, -1, 1, true);
    auto c = random_tensor<double>({5}, 24);
    ScalarFunction<double> f = [&](Tape<double>& t) { return mse_loss(t, x, c); };
    EXPECT_LT(finite_diff_check(f, x, {.eps = 1e-4}), 1e-6);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
    auto x = random_tensor<double>({4}, 25, -1, 1, true);
    auto c = Tensor<double>::from({1}, {3.0});
    ScalarFunction<double> f = [&](Tape<double>& t) { return sum(t, c); };
    EXPECT_EQ(finite_diff_check(f, x), 0.0);
    for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, SampledCoordinates) {
    auto x = random_tensor<double>({1, 2, 8, 8}, 26, -1, 1, true);
    auto w = random_tensor<double>({2, 2, 3, 3}, 27, -1, 1, true);
    auto b = Tensor<double>::zeros({2}, true);
    ScalarFunction<double> f = [&](Tape<double>& t) { return weighted_sum(t, conv2d(t, x, w, b), 28); };
    EXPECT_LT(finite_diff_check(f, x, {.eps = 1e-4, .max_coords = 10, .seed = 3}), kOpTolerance);
}
