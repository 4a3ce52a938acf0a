#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "edgenet/layers.hpp"
#include "edgenet/rng.hpp"
#include "edgenet/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace edgenet;
using testsupport::loss_weights;
using testsupport::max_rel_error;
using testsupport::random_tensor;
using testsupport::weighted_sum;
using testsupport::weights_as_grad;

namespace {

constexpr double kGradTol = 1e-4;

// Random values bounded away from zero, for ops with a kink at the origin.
Tensor<double> random_nonzero_tensor(std::vector<int> shape, Rng& rng) {
    Tensor<double> t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) {
        const double u = rng.uniform(-0.9, 0.9);
        t[i] = u >= 0.0 ? u + 0.1 : u - 0.1;
    }
    return t;
}

ConvSpec make_spec(int ic, int oc, int pad, int dilation) {
    ConvSpec s;
    s.in_channels = ic;
    s.out_channels = oc;
    s.pad = pad;
    s.dilation = dilation;
    return s;
}

}  // namespace

TEST_CASE("tensor shape validation") {
    CHECK_THROWS_AS(Tensor<float>(std::vector<int>{}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor<float>({2, 0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor<float>({2, -1}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor<float>({2, 2}, {1.0f, 2.0f, 3.0f}), std::invalid_argument);

    Tensor<float> t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);
}

TEST_CASE("tensor indexing and cast") {
    Tensor<float> t({2, 2, 3});
    t.at(1, 0, 2) = 5.0f;
    CHECK(t[1 * 6 + 0 * 3 + 2] == 5.0f);

    Tensor<double> d = t.cast<double>();
    CHECK(d.at(1, 0, 2) == 5.0);
    CHECK(d.same_shape(Tensor<double>({2, 2, 3})));

    CHECK(t.all_finite());
    t[0] = std::numeric_limits<float>::infinity();
    CHECK(!t.all_finite());
}

TEST_CASE("conv2d zero input produces bias everywhere") {
    ConvSpec spec = make_spec(2, 3, 1, 1);
    Tensor<double> x({2, 4, 4});
    Rng rng(42);
    Tensor<double> w = random_tensor({3, 2, 3, 3}, rng);
    Tensor<double> b({3}, {0.5, -1.25, 2.0});
    Tensor<double> y = conv2d_forward(x, w, b, spec);
    REQUIRE(y.shape() == std::vector<int>{3, 4, 4});
    for (int oc = 0; oc < 3; ++oc) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                CHECK(y.at(oc, r, c) == b[oc]);
            }
        }
    }
}

TEST_CASE("conv2d identity kernel reproduces the input") {
    ConvSpec spec = make_spec(1, 1, 1, 1);
    Rng rng(7);
    Tensor<double> x = random_tensor({1, 5, 6}, rng);
    Tensor<double> w({1, 1, 3, 3});
    w[4] = 1.0;  // center tap
    Tensor<double> b({1});
    Tensor<double> y = conv2d_forward(x, w, b, spec);
    REQUIRE(y.same_shape(x));
    for (int64_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("dilated conv single-output oracle") {
    // 5x5 input holding (0..24)/25, all-ones 3x3 kernel with dilation 2 and no
    // padding: the only output is the sum of the nine corner/edge/center taps
    // {0,2,4,10,12,14,20,22,24}/25 = 108/25.
    ConvSpec spec = make_spec(1, 1, 0, 2);
    Tensor<double> x({1, 5, 5});
    for (int i = 0; i < 25; ++i) x[i] = i / 25.0;
    Tensor<double> w = Tensor<double>::filled({1, 1, 3, 3}, 1.0);
    Tensor<double> b({1});
    Tensor<double> y = conv2d_forward(x, w, b, spec);
    REQUIRE(y.shape() == std::vector<int>{1, 1, 1});
    CHECK(std::abs(y[0] - 4.32) < 1e-12);
}

TEST_CASE("conv2d rejects mismatched shapes") {
    ConvSpec spec = make_spec(2, 3, 1, 1);
    Tensor<double> x({1, 4, 4});  // wrong channel count
    Rng rng(1);
    Tensor<double> w = random_tensor({3, 2, 3, 3}, rng);
    Tensor<double> b({3});
    CHECK_THROWS_AS(conv2d_forward(x, w, b, spec), std::invalid_argument);

    Tensor<double> x2({2, 4, 4});
    Tensor<double> bad_w = random_tensor({3, 2, 3, 2}, rng);
    CHECK_THROWS_AS(conv2d_forward(x2, bad_w, b, spec), std::invalid_argument);
    Tensor<double> bad_b({2});
    CHECK_THROWS_AS(conv2d_forward(x2, w, bad_b, spec), std::invalid_argument);

    Tensor<double> bad_grad({3, 3, 3});
    CHECK_THROWS_AS(conv2d_backward(x2, w, bad_grad, spec), std::invalid_argument);
}

TEST_CASE("dense forward example") {
    Tensor<double> w({2, 3}, {1, 0, 0, 0, 1, 1});
    Tensor<double> b({2}, {0, 1});
    Tensor<double> x({3}, {2, 3, 4});
    Tensor<double> y = dense_forward(x, w, b);
    REQUIRE(y.shape() == std::vector<int>{2});
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 8.0);
}

TEST_CASE("relu forward and backward") {
    Tensor<double> x({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
    Tensor<double> y = relu_forward(x);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.5);
    CHECK(y[4] == 2.0);

    Tensor<double> g = Tensor<double>::filled({5}, 3.0);
    Tensor<double> dx = relu_backward(x, g);
    CHECK(dx[0] == 0.0);
    CHECK(dx[1] == 0.0);
    CHECK(dx[2] == 0.0);  // gradient at the kink goes to the inactive side
    CHECK(dx[3] == 3.0);
    CHECK(dx[4] == 3.0);

    Tensor<double> wrong({4});
    CHECK_THROWS_AS(relu_backward(x, wrong), std::invalid_argument);
}

TEST_CASE("avgpool averages non-overlapping 2x2 windows") {
    Tensor<double> x({1, 2, 4}, {1, 3, 5, 7, 2, 4, 6, 8});
    Tensor<double> y = avgpool2d_forward(x);
    REQUIRE(y.shape() == std::vector<int>{1, 1, 2});
    CHECK(y[0] == 2.5);
    CHECK(y[1] == 6.5);

    Tensor<double> constant = Tensor<double>::filled({3, 4, 4}, 7.5);
    Tensor<double> pooled = avgpool2d_forward(constant);
    for (int64_t i = 0; i < pooled.size(); ++i) CHECK(pooled[i] == 7.5);

    Tensor<double> g({1, 1, 2}, {4.0, 8.0});
    Tensor<double> dx = avgpool2d_backward(g);
    REQUIRE(dx.same_shape(x));
    for (int i = 0; i < 4; ++i) CHECK(dx[i] == (i < 2 ? 1.0 : 2.0));

    Tensor<double> odd({1, 3, 4});
    CHECK_THROWS_AS(avgpool2d_forward(odd), std::invalid_argument);
}

TEST_CASE("concat stacks channels and backward splits them") {
    Rng rng(11);
    Tensor<double> a = random_tensor({2, 3, 4}, rng);
    Tensor<double> b = random_tensor({3, 3, 4}, rng);
    Tensor<double> y = concat_channels_forward(a, b);
    REQUIRE(y.shape() == std::vector<int>{5, 3, 4});
    for (int64_t i = 0; i < a.size(); ++i) CHECK(y[i] == a[i]);
    for (int64_t i = 0; i < b.size(); ++i) CHECK(y[a.size() + i] == b[i]);

    // One-hot probes: a single pulse in the upstream gradient must land in
    // exactly one branch, at the matching offset.
    for (int64_t probe : {int64_t(0), a.size() - 1, a.size(), y.size() - 1}) {
        Tensor<double> g({5, 3, 4});
        g[probe] = 1.0;
        auto [da, db] = concat_channels_backward(g, 2, 3);
        double total = 0.0;
        for (int64_t i = 0; i < da.size(); ++i) total += da[i];
        for (int64_t i = 0; i < db.size(); ++i) total += db[i];
        CHECK(total == 1.0);
        if (probe < a.size()) {
            CHECK(da[probe] == 1.0);
        } else {
            CHECK(db[probe - a.size()] == 1.0);
        }
    }

    Tensor<double> mismatched({2, 2, 4});
    CHECK_THROWS_AS(concat_channels_forward(a, mismatched), std::invalid_argument);
    CHECK_THROWS_AS(concat_channels_backward(y, 2, 4), std::invalid_argument);
}

TEST_CASE("dropout is identity in evaluation mode and at rate zero") {
    Rng rng(3);
    Tensor<double> x = random_tensor({4, 5, 5}, rng);
    auto eval = dropout_forward(x, 0.25, 99, false);
    for (int64_t i = 0; i < x.size(); ++i) {
        CHECK(eval.y[i] == x[i]);
        CHECK(eval.mask[i] == 1.0);
    }
    auto zero = dropout_forward(x, 0.0, 99, true);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(zero.y[i] == x[i]);

    CHECK_THROWS_AS(dropout_forward(x, 1.0, 0, true), std::invalid_argument);
    CHECK_THROWS_AS(dropout_forward(x, -0.1, 0, true), std::invalid_argument);
}

TEST_CASE("dropout masks scale survivors and reproduce from the seed") {
    Tensor<double> x = Tensor<double>::filled({1000}, 1.0);
    const double rate = 0.25;
    const double scale = 1.0 / (1.0 - rate);

    auto first = dropout_forward(x, rate, 1234, true);
    auto second = dropout_forward(x, rate, 1234, true);
    auto other = dropout_forward(x, rate, 1235, true);
    int64_t kept = 0, differs = 0;
    for (int64_t i = 0; i < x.size(); ++i) {
        CHECK((first.mask[i] == 0.0 || first.mask[i] == scale));
        CHECK(first.mask[i] == second.mask[i]);
        if (first.mask[i] != 0.0) ++kept;
        if (first.mask[i] != other.mask[i]) ++differs;
    }
    CHECK(kept > 650);  // ~750 expected
    CHECK(kept < 850);
    CHECK(differs > 0);
}

TEST_CASE("dropout keeps the signal unbiased over many seeds") {
    Tensor<double> x = Tensor<double>::filled({500}, 1.0);
    double mean = 0.0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        auto r = dropout_forward(x, 0.25, 6000 + s, true);
        double acc = 0.0;
        for (int64_t i = 0; i < r.y.size(); ++i) acc += r.y[i];
        mean += acc / static_cast<double>(r.y.size());
    }
    mean /= seeds;
    CHECK(std::abs(mean - 1.0) < 0.01);
}

TEST_CASE("dropout decisions agree between single and double precision") {
    Rng rng(5);
    Tensor<double> xd = random_tensor({333}, rng);
    Tensor<float> xf = xd.cast<float>();
    auto rd = dropout_forward(xd, 0.25, 777, true);
    auto rf = dropout_forward(xf, 0.25, 777, true);
    for (int64_t i = 0; i < xd.size(); ++i) {
        CHECK((rd.mask[i] == 0.0) == (rf.mask[i] == 0.0f));
    }
}

TEST_CASE("flatten and reshape preserve data") {
    Rng rng(21);
    Tensor<double> x = random_tensor({2, 3, 4}, rng);
    Tensor<double> flat = flatten(x);
    REQUIRE(flat.shape() == std::vector<int>{24});
    Tensor<double> back = reshape(flat, {2, 3, 4});
    for (int64_t i = 0; i < x.size(); ++i) {
        CHECK(flat[i] == x[i]);
        CHECK(back[i] == x[i]);
    }
    CHECK_THROWS_AS(reshape(x, {5, 5}), std::invalid_argument);
}

TEST_CASE("softmax of uniform logits is uniform") {
    for (int k : {2, 7, 10}) {
        Tensor<double> logits = Tensor<double>::filled({k}, 0.37);
        Tensor<double> p = softmax(logits);
        double sum = 0.0;
        for (int i = 0; i < k; ++i) {
            CHECK(std::abs(p[i] - 1.0 / k) < 1e-15);
            sum += p[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        auto ce = cross_entropy(p, 0);
        CHECK(std::abs(ce.loss - std::log(static_cast<double>(k))) < 1e-12);
    }
}

TEST_CASE("softmax and cross-entropy frozen example") {
    Tensor<double> logits({3}, {1.0, 2.0, 3.0});
    Tensor<double> p = softmax(logits);
    CHECK(std::abs(p[0] - 0.090030573170380462) < 1e-14);
    CHECK(std::abs(p[1] - 0.24472847105479767) < 1e-14);
    CHECK(std::abs(p[2] - 0.6652409557748219) < 1e-14);

    auto ce = cross_entropy(p, 2);
    CHECK(std::abs(ce.loss - 0.40760596444438013) < 1e-13);
    // Combined softmax+cross-entropy gradient: probs - onehot(label).
    CHECK(std::abs(ce.dlogits[0] - p[0]) < 1e-15);
    CHECK(std::abs(ce.dlogits[1] - p[1]) < 1e-15);
    CHECK(std::abs(ce.dlogits[2] - (p[2] - 1.0)) < 1e-15);

    CHECK_THROWS_AS(cross_entropy(p, 3), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(p, -1), std::invalid_argument);
}

TEST_CASE("softmax stays finite for extreme logits") {
    Tensor<double> logits({4}, {1000.0, 0.0, -500.0, 999.0});
    Tensor<double> p = softmax(logits);
    CHECK(p.all_finite());
    CHECK(p[0] > 0.7);
    auto ce = cross_entropy(p, 2);  // probability underflows to 0
    CHECK(std::isfinite(ce.loss));
    CHECK(ce.loss > 100.0);
}

// ---- finite-difference gradient checks --------------------------------------

TEST_CASE("conv2d gradients match finite differences") {
    struct Case {
        std::vector<int> x_shape;
        ConvSpec spec;
    };
    std::vector<Case> cases = {
        {{1, 5, 5}, make_spec(1, 2, 1, 1)},
        {{2, 4, 6}, make_spec(2, 3, 1, 1)},
        {{3, 6, 6}, make_spec(3, 2, 2, 2)},  // dilated, same-size padding
        {{2, 5, 5}, make_spec(2, 1, 0, 1)},  // no padding
        {{1, 7, 5}, make_spec(1, 4, 2, 2)},
    };
    Rng rng(314);
    for (size_t ci = 0; ci < cases.size(); ++ci) {
        const ConvSpec& spec = cases[ci].spec;
        Tensor<double> x = random_tensor(cases[ci].x_shape, rng);
        Tensor<double> w = random_tensor(
            {spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w}, rng);
        Tensor<double> b = random_tensor({spec.out_channels}, rng);
        Tensor<double> y = conv2d_forward(x, w, b, spec);
        const auto lw = loss_weights(y.size(), 1000 + ci);
        const Tensor<double> gy = weights_as_grad(y.shape(), lw);
        ConvGrads<double> g = conv2d_backward(x, w, gy, spec);

        CAPTURE(ci);
        CHECK(max_rel_error(g.dx, x, [&](const Tensor<double>& v) {
                  return weighted_sum(conv2d_forward(v, w, b, spec), lw);
              }) < kGradTol);
        CHECK(max_rel_error(g.dw, w, [&](const Tensor<double>& v) {
                  return weighted_sum(conv2d_forward(x, v, b, spec), lw);
              }) < kGradTol);
        CHECK(max_rel_error(g.db, b, [&](const Tensor<double>& v) {
                  return weighted_sum(conv2d_forward(x, w, v, spec), lw);
              }) < kGradTol);
    }
}

TEST_CASE("dense gradients match finite differences") {
    Rng rng(2718);
    for (int ci = 0; ci < 4; ++ci) {
        const int in = 3 + 2 * ci, out = 2 + ci;
        Tensor<double> x = random_tensor({in}, rng);
        Tensor<double> w = random_tensor({out, in}, rng);
        Tensor<double> b = random_tensor({out}, rng);
        const auto lw = loss_weights(out, 2000 + ci);
        const Tensor<double> gy = weights_as_grad({out}, lw);
        DenseGrads<double> g = dense_backward(x, w, gy);

        CAPTURE(ci);
        CHECK(max_rel_error(g.dx, x, [&](const Tensor<double>& v) {
                  return weighted_sum(dense_forward(v, w, b), lw);
              }) < kGradTol);
        CHECK(max_rel_error(g.dw, w, [&](const Tensor<double>& v) {
                  return weighted_sum(dense_forward(x, v, b), lw);
              }) < kGradTol);
        CHECK(max_rel_error(g.db, b, [&](const Tensor<double>& v) {
                  return weighted_sum(dense_forward(x, w, v), lw);
              }) < kGradTol);
    }
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
    Rng rng(99);
    for (int ci = 0; ci < 4; ++ci) {
        Tensor<double> x = random_nonzero_tensor({3, 4, 4}, rng);
        const auto lw = loss_weights(x.size(), 3000 + ci);
        const Tensor<double> gy = weights_as_grad(x.shape(), lw);
        Tensor<double> dx = relu_backward(x, gy);
        CAPTURE(ci);
        CHECK(max_rel_error(dx, x, [&](const Tensor<double>& v) {
                  return weighted_sum(relu_forward(v), lw);
              }) < kGradTol);
    }
}

TEST_CASE("avgpool gradient matches finite differences") {
    Rng rng(123);
    Tensor<double> x = random_tensor({2, 4, 6}, rng);
    Tensor<double> y = avgpool2d_forward(x);
    const auto lw = loss_weights(y.size(), 4000);
    const Tensor<double> gy = weights_as_grad(y.shape(), lw);
    Tensor<double> dx = avgpool2d_backward(gy);
    CHECK(max_rel_error(dx, x, [&](const Tensor<double>& v) {
              return weighted_sum(avgpool2d_forward(v), lw);
          }) < kGradTol);
}

TEST_CASE("concat gradients match finite differences") {
    Rng rng(456);
    Tensor<double> a = random_tensor({2, 3, 3}, rng);
    Tensor<double> b = random_tensor({4, 3, 3}, rng);
    Tensor<double> y = concat_channels_forward(a, b);
    const auto lw = loss_weights(y.size(), 5000);
    const Tensor<double> gy = weights_as_grad(y.shape(), lw);
    auto [da, db] = concat_channels_backward(gy, 2, 4);
    CHECK(max_rel_error(da, a, [&](const Tensor<double>& v) {
              return weighted_sum(concat_channels_forward(v, b), lw);
          }) < kGradTol);
    CHECK(max_rel_error(db, b, [&](const Tensor<double>& v) {
              return weighted_sum(concat_channels_forward(a, v), lw);
          }) < kGradTol);
}

TEST_CASE("dropout gradient routes exactly through the mask") {
    Rng rng(789);
    Tensor<double> x = random_tensor({6, 5, 5}, rng);
    const uint64_t seed = 31337;
    auto fwd = dropout_forward(x, 0.25, seed, true);
    const auto lw = loss_weights(x.size(), 6000);
    const Tensor<double> gy = weights_as_grad(x.shape(), lw);
    Tensor<double> dx = dropout_backward(gy, fwd.mask);
    // The mask is frozen by the seed, so the op is linear and finite
    // differences apply.
    CHECK(max_rel_error(dx, x, [&](const Tensor<double>& v) {
              return weighted_sum(dropout_forward(v, 0.25, seed, true).y, lw);
          }) < kGradTol);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
    Rng rng(135);
    for (int ci = 0; ci < 5; ++ci) {
        Tensor<double> logits = random_tensor({10}, rng, -2.0, 2.0);
        const int label = ci * 2 + 1;
        auto ce = cross_entropy(softmax(logits), label);
        CAPTURE(ci);
        CHECK(max_rel_error(ce.dlogits, logits, [&](const Tensor<double>& v) {
                  return static_cast<double>(cross_entropy(softmax(v), label).loss);
              }) < kGradTol);
    }
}
